#include "matconc/io.hpp"

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace matconc::io {

namespace {

constexpr std::uint64_t kBuiltinSeed = 20240501;

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(fmt::format("{}: expected a number", where));
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(fmt::format("{}: non-finite number", where));
  return x;
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(fmt::format("{}: missing field '{}'", where, key));
  }
  return j.at(key);
}

std::string str(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(fmt::format("{}: expected a string", where));
  return j.get<std::string>();
}

template <class T>
T integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", where));
  return j.get<T>();
}

std::optional<SymMat> opt_matrix(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse_matrix(j.at(key), key);
}

SymMat matrix_or(const Json& j, const char* key, const SymMat& fallback) {
  const auto m = opt_matrix(j, key);
  return m ? *m : fallback;
}

}  // namespace

SymMat parse_matrix(const Json& j, const std::string& where) {
  if (j.is_object()) {
    if (j.contains("diag")) {
      const Json& dg = j.at("diag");
      if (!dg.is_array() || dg.empty()) throw ConfigError(fmt::format("{}: 'diag' must be a non-empty array", where));
      std::vector<double> v;
      for (const auto& x : dg) v.push_back(number(x, where));
      return SymMat::diagonal(std::span<const double>(v));
    }
    if (j.contains("identity")) {
      const auto d = integer<Eigen::Index>(j.at("identity"), where);
      if (d < 1) throw ConfigError(fmt::format("{}: dimension must be at least 1", where));
      const double s = j.contains("scale") ? number(j.at("scale"), where) : 1.0;
      return SymMat::scaled_identity(d, s);
    }
    throw ConfigError(fmt::format("{}: unknown matrix form", where));
  }
  if (j.is_number()) return SymMat::scaled_identity(1, number(j, where));
  if (!j.is_array() || j.empty()) throw ConfigError(fmt::format("{}: expected a square array of rows", where));
  const auto d = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) {
      throw ConfigError(fmt::format("{}: row {} must have {} entries", where, r, d));
    }
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = number(row.at(static_cast<std::size_t>(c)), where);
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTol * scale) {
    throw ConfigError(fmt::format("{}: matrix is not symmetric (asymmetry {:.3g})", where, asym));
  }
  return SymMat(m);
}

Json matrix_to_json(const SymMat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.dim(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.dim(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

GeneratorPtr parse_generator(const Json& j) {
  const std::string where = "generator";
  if (!j.is_object()) throw ConfigError("generator: expected an object");
  const GeneratorKind kind = parse_generator_kind(str(field(j, "kind", where), where + ".kind"));
  auto mat = [&](const char* key) { return parse_matrix(field(j, key, where), where + "." + key); };
  auto num = [&](const char* key, double fallback) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
  };
  GeneratorPtr g;
  try {
    switch (kind) {
      case GeneratorKind::RademacherScaled: {
        const SymMat c = mat("c");
        g = make_rademacher_scaled(c, matrix_or(j, "m", SymMat::zero(c.dim())));
        break;
      }
      case GeneratorKind::GaussianScaled: {
        const SymMat c = mat("c");
        g = make_gaussian_scaled(c, matrix_or(j, "m", SymMat::zero(c.dim())));
        break;
      }
      case GeneratorKind::BoundedPsd:
        g = make_bounded_psd(mat("b"), mat("m"));
        break;
      case GeneratorKind::SymmetricHeavy: {
        const SymMat s = mat("s");
        g = make_symmetric_heavy(s, matrix_or(j, "m", SymMat::zero(s.dim())), num("tail", 3.0),
                                 num("iso", 0.0));
        break;
      }
      case GeneratorKind::HeavyPsd:
        g = make_heavy_psd(mat("shape"), num("tail", 3.0));
        break;
      case GeneratorKind::ExchangeableMixture:
        g = make_exchangeable_mixture(mat("m"), mat("d"), mat("c"));
        break;
      case GeneratorKind::IidWishartLike:
        g = make_iid_wishart_like(mat("m"));
        break;
      case GeneratorKind::EllipsoidRank1:
        g = make_ellipsoid_rank1(mat("a"), num("radius_power", 1.0));
        break;
      case GeneratorKind::RandomSignSpectral: {
        const SymMat c = mat("c");
        g = make_random_sign_spectral(c, matrix_or(j, "m", SymMat::zero(c.dim())));
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("generator {}: {}", to_string(kind), e.what()));
  }
  if (j.contains("dim") && integer<Eigen::Index>(j.at("dim"), "generator.dim") != g->dim()) {
    throw ConfigError("generator: 'dim' does not match the matrix parameters");
  }
  return g;
}

McConfig parse_mc(const Json& j, McConfig mc) {
  if (j.is_null()) return mc;
  if (!j.is_object()) throw ConfigError("mc: expected an object");
  if (j.contains("trials")) mc.trials = integer<std::int64_t>(j.at("trials"), "mc.trials");
  if (j.contains("n_max")) mc.n_max = integer<long>(j.at("n_max"), "mc.n_max");
  if (j.contains("workers")) mc.workers = integer<int>(j.at("workers"), "mc.workers");
  if (j.contains("seed")) mc.seed = integer<std::uint64_t>(j.at("seed"), "mc.seed");
  if (j.contains("stopping")) mc.stopping.kind = parse_stopping_kind(str(j.at("stopping"), "mc.stopping"));
  if (j.contains("geometric_p")) mc.stopping.geometric_p = number(j.at("geometric_p"), "mc.geometric_p");
  if (j.contains("check_dominance")) {
    if (!j.at("check_dominance").is_boolean()) throw ConfigError("mc.check_dominance: expected a boolean");
    mc.check_dominance = j.at("check_dominance").get<bool>();
  }
  mc.validate();
  return mc;
}

CoverageCase parse_case(const Json& j) {
  if (!j.is_object()) throw ConfigError("case: expected an object");
  CoverageCase c;
  c.bound = parse_bound_id(str(field(j, "bound", "case"), "case.bound"));
  c.generator = parse_generator(field(j, "generator", "case"));
  if (j.contains("label")) c.label = str(j.at("label"), "case.label");
  if (j.contains("target")) c.target = number(j.at("target"), "case.target");
  c.shape = opt_matrix(j, "shape");
  c.threshold = opt_matrix(j, "threshold");
  if (j.contains("n")) c.n = integer<long>(j.at("n"), "case.n");
  if (j.contains("p")) c.p = number(j.at("p"), "case.p");
  if (j.contains("gamma")) c.gamma = number(j.at("gamma"), "case.gamma");
  if (j.contains("mgf_row")) c.mgf_row = parse_mgf_kind(str(j.at("mgf_row"), "case.mgf_row"));
  if (j.contains("builder")) c.builder = parse_builder_kind(str(j.at("builder"), "case.builder"));
  c.randomizer_shift = opt_matrix(j, "randomizer_shift");
  if (j.contains("randomizer")) {
    const Json& r = j.at("randomizer");
    if (r.is_object()) {
      c.randomizer = parse_matrix_randomizer_kind(str(field(r, "kind", "randomizer"), "randomizer.kind"));
      if (r.contains("seed")) c.randomizer_seed = integer<std::uint64_t>(r.at("seed"), "randomizer.seed");
      if (r.contains("y")) c.randomizer_shift = parse_matrix(r.at("y"), "randomizer.y");
    } else {
      c.randomizer = parse_matrix_randomizer_kind(str(r, "case.randomizer"));
    }
  }
  c.hypothesized_mean = opt_matrix(j, "hypothesized_mean");
  return c;
}

GammaSchedule parse_gamma_schedule(const Json& j) {
  if (j.is_number()) return GammaSchedule::constant(number(j, "gamma"));
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(number(x, "gamma"));
    if (v.empty()) throw ConfigError("gamma: empty list");
    return GammaSchedule::list(std::move(v));
  }
  if (j.is_object()) {
    const std::string kind = str(field(j, "kind", "gamma"), "gamma.kind");
    const double c = number(field(j, "c", "gamma"), "gamma.c");
    if (kind == "constant") return GammaSchedule::constant(c);
    if (kind == "inv_sqrt") return GammaSchedule::inv_sqrt(c);
    throw ConfigError(fmt::format("gamma: unknown schedule '{}'", kind));
  }
  throw ConfigError("gamma: expected a number, a list or a schedule object");
}

PowerConfig parse_power_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("power-compare config: expected an object");
  PowerConfig cfg;
  cfg.generator = parse_generator(field(j, "generator", "config"));
  const Eigen::Index d = cfg.generator->dim();
  cfg.null_mean = matrix_or(j, "null_mean", SymMat::zero(d));
  cfg.variance = matrix_or(j, "variance", SymMat::identity(d));
  const double alpha = j.contains("alpha") ? number(j.at("alpha"), "alpha") : 0.05;
  if (const auto shape = opt_matrix(j, "shape")) {
    cfg.test = TestConfig::from_shape(alpha, *shape);
  } else {
    cfg.test = TestConfig::isotropic(alpha, d);
  }
  if (j.contains("gamma")) cfg.schedule = parse_gamma_schedule(j.at("gamma"));
  if (j.contains("n_max")) cfg.n_max = integer<long>(j.at("n_max"), "n_max");
  if (j.contains("trials")) cfg.trials = integer<std::int64_t>(j.at("trials"), "trials");
  cfg.seed = j.contains("seed") ? integer<std::uint64_t>(j.at("seed"), "seed") : default_seed();
  if (j.contains("workers")) cfg.workers = integer<int>(j.at("workers"), "workers");
  if (j.contains("randomized_scalar")) {
    if (!j.at("randomized_scalar").is_boolean()) throw ConfigError("randomized_scalar: expected a boolean");
    cfg.randomized_scalar = j.at("randomized_scalar").get<bool>();
  }
  cfg.validate();
  return cfg;
}

Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", where, e.what()));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw ConfigError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError(fmt::format("cannot move output into '{}'", path));
  }
}

std::uint64_t default_seed() {
  const char* env = std::getenv("MATCONC_SEED");
  if (!env || !*env) return kBuiltinSeed;
  if (*env == '-') throw ConfigError("MATCONC_SEED must be a nonnegative integer");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0') throw ConfigError("MATCONC_SEED must be a nonnegative integer");
  return v;
}

}  // namespace matconc::io
