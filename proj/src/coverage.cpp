#include "matconc/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "matconc/scalar_e.hpp"

namespace matconc {

namespace {

struct BoundName {
  BoundId id;
  const char* name;
};

constexpr BoundName kBoundNames[] = {
    {BoundId::Ummi, "UMMI"},
    {BoundId::Umci1, "UMCI1"},
    {BoundId::UmciN, "UMCI_N"},
    {BoundId::Pcheb1, "PCHEB1"},
    {BoundId::Chernoff1, "CHERNOFF1"},
    {BoundId::ChernoffHoeffding, "CHERNOFF_HOEFFDING"},
    {BoundId::VecPcheb, "VEC_PCHEB"},
    {BoundId::SpectralPcheb, "SPECTRAL_PCHEB"},
    {BoundId::Umvi, "UMVI"},
    {BoundId::Mvi, "MVI"},
    {BoundId::EprocessMin, "EPROCESS_MIN"},
    {BoundId::Doob, "DOOB"},
    {BoundId::Xmci, "XMCI"},
    {BoundId::Xmci2, "XMCI2"},
    {BoundId::Xmpci, "XMPCI"},
    {BoundId::TracePcheb, "TRACE_PCHEB"},
    {BoundId::Ursn, "URSN"},
    {BoundId::Usmhi, "USMHI"},
};

}  // namespace

std::string to_string(BoundId b) {
  for (const auto& e : kBoundNames) {
    if (e.id == b) return e.name;
  }
  return "?";
}

BoundId parse_bound_id(const std::string& s) {
  for (const auto& e : kBoundNames) {
    if (s == e.name) return e.id;
  }
  throw ConfigError(fmt::format("unknown bound '{}'", s));
}

const std::vector<BoundId>& all_bounds() {
  static const std::vector<BoundId> ids = [] {
    std::vector<BoundId> v;
    for (const auto& e : kBoundNames) v.push_back(e.id);
    return v;
  }();
  return ids;
}

bool is_sequential(BoundId b) {
  switch (b) {
    case BoundId::Umvi:
    case BoundId::Mvi:
    case BoundId::EprocessMin:
    case BoundId::Doob:
    case BoundId::Xmci:
    case BoundId::Xmci2:
    case BoundId::Xmpci:
    case BoundId::TracePcheb:
    case BoundId::Ursn:
    case BoundId::Usmhi:
      return true;
    default:
      return false;
  }
}

bool is_randomizable(BoundId b) {
  switch (b) {
    case BoundId::Ummi:
    case BoundId::Umci1:
    case BoundId::UmciN:
    case BoundId::Pcheb1:
    case BoundId::Chernoff1:
    case BoundId::ChernoffHoeffding:
    case BoundId::Umvi:
    case BoundId::EprocessMin:
    case BoundId::Ursn:
    case BoundId::Usmhi:
      return true;
    default:
      return false;
  }
}

std::string to_string(StoppingKind k) {
  switch (k) {
    case StoppingKind::Fixed: return "fixed";
    case StoppingKind::FirstCrossing: return "first_crossing";
    case StoppingKind::Geometric: return "geometric";
  }
  return "?";
}

StoppingKind parse_stopping_kind(const std::string& s) {
  if (s == "fixed") return StoppingKind::Fixed;
  if (s == "first_crossing") return StoppingKind::FirstCrossing;
  if (s == "geometric") return StoppingKind::Geometric;
  throw ConfigError(fmt::format("unknown stopping rule '{}'", s));
}

void McConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (n_max < 1) throw ConfigError("horizon N_max must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (stopping.kind == StoppingKind::Geometric &&
      !(stopping.geometric_p > 0.0 && stopping.geometric_p <= 1.0)) {
    throw ConfigError("geometric stopping probability must lie in (0, 1]");
  }
}

MgfParams mgf_params_for(const Generator& g, MgfKind row) {
  MgfParams p;
  p.kind = row;
  switch (row) {
    case MgfKind::Rademacher: {
      const auto b = g.deviation_square_bound();
      if (g.kind() != GeneratorKind::RademacherScaled || !b) {
        throw IncompatiblePair("Rademacher row needs X - M = R C (RADEMACHER_SCALED)");
      }
      p.c = mat_sqrt(*b);
      break;
    }
    case MgfKind::UniGaussian: {
      const auto v = g.variance();
      if (g.kind() != GeneratorKind::GaussianScaled || !v) {
        throw IncompatiblePair("uni-Gaussian row needs X - M = g C (GAUSSIAN_SCALED)");
      }
      p.c = mat_sqrt(*v);
      break;
    }
    case MgfKind::BennettI:
    case MgfKind::BennettII: {
      const auto top = g.deviation_lambda_max_bound();
      const auto v = g.variance();
      if (!top || *top > 1.0 || !v) {
        throw IncompatiblePair("Bennett rows need λmax(X - M) <= 1 and a finite variance");
      }
      if (row == MgfKind::BennettI) {
        p.v = *v;
      } else {
        const auto b = g.deviation_square_bound();
        p.v = b ? *b : 1.25 * *v;
      }
      break;
    }
    case MgfKind::SymmetricHoeffding: {
      const auto b = g.deviation_square_bound();
      if (!g.symmetric_deviation() || !b) {
        throw IncompatiblePair("symmetric Hoeffding needs symmetric X - M with (X - M)² ⪯ B");
      }
      p.b = *b;
      break;
    }
  }
  return p;
}

BuilderParams builder_params_for(const Generator& g, BuilderKind kind, const SymMat& mean) {
  BuilderParams bp;
  bp.kind = kind;
  bp.mean = mean;
  switch (kind) {
    case BuilderKind::Mgf: {
      std::optional<MgfParams> row;
      for (MgfKind k : {MgfKind::Rademacher, MgfKind::UniGaussian, MgfKind::BennettI}) {
        try {
          row = mgf_params_for(g, k);
          break;
        } catch (const IncompatiblePair&) {
        }
      }
      if (!row) throw IncompatiblePair("MGF builder: no matrix MGF row fits this generator");
      bp.mgf = row;
      break;
    }
    case BuilderKind::Betting: {
      const auto b = g.upper_bound();
      if (!g.psd_valued() || !b) throw IncompatiblePair("betting builder needs 0 ⪯ X ⪯ B");
      bp.upper = *b;
      break;
    }
    case BuilderKind::SelfNormalized: {
      const auto v = g.variance();
      if (!g.symmetric_deviation() || !v) {
        throw IncompatiblePair("self-normalized builder needs symmetric deviations with finite variance");
      }
      bp.variance = *v;
      break;
    }
    case BuilderKind::Symmetric:
      if (!g.symmetric_deviation()) {
        throw IncompatiblePair("symmetric builder needs conditionally symmetric deviations");
      }
      break;
  }
  return bp;
}

double default_builder_gamma(const Generator& g, BuilderKind kind, const SymMat& mean) {
  if (kind == BuilderKind::Betting) {
    const auto b = g.upper_bound();
    if (!b) throw IncompatiblePair("betting builder needs 0 ⪯ X ⪯ B");
    const double hi = betting_gamma_range(mean, *b).second;
    return std::isfinite(hi) ? 0.5 * hi : 1.0;
  }
  return 0.5;
}

namespace {

SymMat default_shape(const CoverageCase& c) {
  return c.shape ? *c.shape : SymMat::identity(c.generator->dim());
}

std::string auto_label(const CoverageCase& c, const McConfig& mc) {
  std::string s = fmt::format("{}/{}/d={}", to_string(c.bound), to_string(c.generator->kind()),
                              c.generator->dim());
  switch (c.bound) {
    case BoundId::ChernoffHoeffding:
      s += fmt::format("/{}/n={}", to_string(c.mgf_row), c.n);
      break;
    case BoundId::UmciN:
    case BoundId::VecPcheb:
    case BoundId::SpectralPcheb:
      s += fmt::format("/n={}", c.n);
      break;
    case BoundId::Umvi:
      s += fmt::format("/{}/{}", to_string(c.builder), to_string(mc.stopping.kind));
      break;
    case BoundId::Mvi:
    case BoundId::EprocessMin:
      s += fmt::format("/{}", to_string(c.builder));
      break;
    case BoundId::Xmci2:
      s += fmt::format("/N={}", c.n);
      break;
    default:
      break;
  }
  if (c.bound == BoundId::Pcheb1 || c.bound == BoundId::VecPcheb ||
      c.bound == BoundId::SpectralPcheb || c.bound == BoundId::Xmpci ||
      c.bound == BoundId::TracePcheb) {
    s += fmt::format("/p={}", c.p);
  }
  if (is_randomizable(c.bound)) s += "/U=" + to_string(c.randomizer);
  return s;
}

template <class T>
T require(const std::optional<T>& v, const char* what) {
  if (!v) throw IncompatiblePair(what);
  return *v;
}

// Everything that is fixed across trials.
struct Plan {
  BoundId bound;
  Eigen::Index d = 1;
  SymMat mean = SymMat::zero(1);  // mean assumed by the bound
  std::optional<SymMat> a;        // matrix threshold
  std::optional<SymMat> sqrt_a;
  double a_scalar = 0.0;          // scalar threshold (Chernoff shift, p-norm level, alpha)
  double stated = 0.0;
  double gamma = 0.0;
  double p = 1.5;
  long n = 1;
  std::optional<MgfParams> mgf;
  std::vector<BuilderParams> builders;
  std::optional<SymMat> v;  // variance or Hoeffding B for scalar processes
  bool alternative = false;
};

void check_sample_size(const CoverageCase& c) {
  if (c.n < 1) throw ConfigError("sample size n must be at least 1");
}

void require_iid(const Generator& g, const char* what) {
  if (!g.iid()) throw IncompatiblePair(fmt::format("{} needs i.i.d. draws", what));
}

// Threshold c S with bound(c S) = base / c^k equal to target.
SymMat calibrate(const SymMat& shape, double base, double k, double target) {
  if (!(base > 0.0)) throw IncompatiblePair("bound vanishes at every threshold (degenerate law)");
  return shape * std::pow(base / target, 1.0 / k);
}

Plan make_plan(const CoverageCase& c, const McConfig& mc) {
  if (!c.generator) throw ConfigError("coverage case has no generator");
  if (!(c.target > 0.0) || !std::isfinite(c.target)) throw ConfigError("target must be positive");
  const Generator& g = *c.generator;
  Plan pl;
  pl.bound = c.bound;
  pl.d = g.dim();
  pl.mean = c.hypothesized_mean ? *c.hypothesized_mean : g.mean();
  require_same_dim(pl.mean, g.mean(), "hypothesized mean");
  pl.alternative = c.hypothesized_mean && !((*c.hypothesized_mean - g.mean()).matrix().isZero(1e-12));
  pl.p = c.p;
  pl.n = c.n;
  const SymMat shape = default_shape(c);
  require_same_dim(shape, g.mean(), "threshold shape");
  if (!is_positive_definite(shape)) throw ConfigError("threshold shape must be positive definite");
  if (c.threshold) {
    require_same_dim(*c.threshold, g.mean(), "threshold");
    if (!is_positive_definite(*c.threshold)) throw ConfigError("threshold must be positive definite");
  }
  if (c.randomizer == MatrixRandomizer::Kind::Shifted) {
    if (!c.randomizer_shift) throw ConfigError("shifted randomizer needs a shift matrix");
    if (c.bound == BoundId::Ursn || c.bound == BoundId::Usmhi) {
      throw IncompatiblePair("scalar e-process bounds take a scalar randomizer");
    }
  }
  auto pick = [&](double base, double k) {
    return c.threshold ? *c.threshold : calibrate(shape, base, k, c.target);
  };
  const double dd = static_cast<double>(pl.d);

  switch (c.bound) {
    case BoundId::Ummi: {
      if (!g.psd_valued()) throw IncompatiblePair("UMMI needs PSD-valued X");
      const SymMat ex = g.mean();
      pl.a = pick(ummi_bound(ex, shape), 1.0);
      pl.stated = ummi_bound(ex, *pl.a);
      break;
    }
    case BoundId::Umci1:
    case BoundId::UmciN: {
      const SymMat v = require(g.variance(), "Chebyshev bounds need a finite variance");
      check_sample_size(c);
      long n = 1;
      if (c.bound == BoundId::UmciN) {
        require_iid(g, "UMCI_N");
        n = c.n;
      }
      pl.n = n;
      pl.a = pick(chebyshev_n_bound(v, shape, n), 2.0);
      pl.stated = chebyshev_n_bound(v, *pl.a, n);
      break;
    }
    case BoundId::Pcheb1: {
      require_p_in_unit_range(c.p, "PCHEB1");
      const SymMat vp = require(g.central_abs_moment(c.p), "PCHEB1 needs a finite central p-th moment");
      pl.a = pick(pcheb1_bound(vp, shape, c.p), c.p);
      pl.stated = pcheb1_bound(vp, *pl.a, c.p);
      break;
    }
    case BoundId::Chernoff1: {
      pl.gamma = c.gamma.value_or(0.5);
      if (!(pl.gamma > 0.0)) throw ConfigError("CHERNOFF1 needs gamma > 0");
      const double gm = pl.gamma;
      const SymMat mgf = require(g.expect([gm](const SymMat& x) { return mat_exp(2.0 * gm * x); }),
                                 "CHERNOFF1 needs E exp(2γX) in closed form");
      if (c.threshold) {
        pl.a = *c.threshold;
      } else {
        const double shift = (std::log(trace(mgf)) - std::log(c.target)) / (2.0 * gm);
        pl.a = SymMat::scaled_identity(pl.d, shift);
      }
      pl.stated = chernoff1_bound(mgf, *pl.a, gm);
      break;
    }
    case BoundId::ChernoffHoeffding: {
      check_sample_size(c);
      require_iid(g, "CHERNOFF_HOEFFDING");
      pl.mgf = mgf_params_for(g, c.mgf_row);
      const double nn = static_cast<double>(c.n);
      double gm = 0.0;
      if (c.gamma) {
        gm = *c.gamma;
      } else {
        // Minimizer of the bound for a scalar sub-Gaussian proxy at the scale of the row.
        const SymMat scale = pl.mgf->c ? mat_square(*pl.mgf->c) : pl.mgf->v ? *pl.mgf->v : *pl.mgf->b;
        const double s = std::max(lambda_max(scale), 1e-12);
        gm = std::sqrt(2.0 * nn * std::log(std::max(dd / c.target, 1.0 + 1e-9)) / s);
      }
      if (!(gm > 0.0)) throw ConfigError("CHERNOFF_HOEFFDING needs gamma > 0");
      pl.gamma = gm;
      pl.a_scalar = (mgf_log_trace_bound(*pl.mgf, gm, c.n) - std::log(c.target)) / gm;
      pl.stated = chernoff_hoeffding_bound(*pl.mgf, gm, c.n, pl.a_scalar);
      break;
    }
    case BoundId::VecPcheb:
    case BoundId::SpectralPcheb: {
      check_sample_size(c);
      require_iid(g, to_string(c.bound).c_str());
      require_p_in_unit_range(c.p, "p-Chebyshev");
      const bool vec = c.bound == BoundId::VecPcheb;
      const double vp = vec ? require(g.vector_central_moment(c.p), "needs E||diag(X - M)||^p")
                            : require(g.spectral_central_moment(c.p), "needs E||X - M||^p");
      const double moment = vec ? vector_pcheb_moment_bound(vp, pl.d, c.n, c.p)
                                : spectral_pcheb_moment_bound(vp, pl.d, c.n, c.p);
      if (!(moment > 0.0)) throw IncompatiblePair("degenerate law");
      pl.a_scalar = std::pow(moment / c.target, 1.0 / c.p) / static_cast<double>(c.n);
      pl.stated = vec ? vector_pcheb_bound(vp, pl.d, c.n, c.p, pl.a_scalar)
                      : spectral_pcheb_bound(vp, pl.d, c.n, c.p, pl.a_scalar);
      break;
    }
    case BoundId::Umvi:
    case BoundId::Mvi:
    case BoundId::EprocessMin: {
      require_iid(g, to_string(c.bound).c_str());
      pl.builders.push_back(builder_params_for(g, c.builder, pl.mean));
      if (c.bound == BoundId::EprocessMin) {
        const BuilderKind other =
            c.builder == BuilderKind::Symmetric ? BuilderKind::SelfNormalized : BuilderKind::Symmetric;
        pl.builders.push_back(builder_params_for(g, other, pl.mean));
      }
      pl.gamma = c.gamma ? *c.gamma : default_builder_gamma(g, c.builder, pl.mean);
      if (c.builder == BuilderKind::Betting) {
        const auto [lo, hi] = betting_gamma_range(pl.mean, *pl.builders[0].upper);
        if (!(pl.gamma > lo && pl.gamma < hi)) {
          throw GammaOutOfRange(fmt::format("betting γ {} outside ({}, {})", pl.gamma, lo, hi));
        }
      }
      pl.a = pick(trace(mat_inverse(shape)), 1.0);
      pl.stated = ville_bound(SymMat::identity(pl.d), *pl.a);
      break;
    }
    case BoundId::Doob: {
      require_iid(g, "DOOB");
      const SymMat v = require(g.variance(), "DOOB needs a finite variance");
      const double big_n = static_cast<double>(mc.n_max);
      pl.a = pick(doob_bound(big_n * v, shape), 1.0);
      pl.stated = doob_bound(big_n * v, *pl.a);
      break;
    }
    case BoundId::Xmci:
    case BoundId::Xmci2: {
      const SymMat v = require(g.variance(), "XMCI needs a finite variance");
      long first = 1;
      if (c.bound == BoundId::Xmci2) {
        require_iid(g, "XMCI2");
        check_sample_size(c);
        if (c.n > mc.n_max) throw ConfigError("XMCI2 first index exceeds the horizon");
        first = c.n;
      }
      pl.n = first;
      pl.a = pick(xmci2_bound(v, shape, first), 2.0);
      pl.stated = xmci2_bound(v, *pl.a, first);
      break;
    }
    case BoundId::Xmpci: {
      require_p_in_unit_range(c.p, "XMPCI");
      if (!g.psd_valued()) throw IncompatiblePair("XMPCI needs PSD-valued X");
      const SymMat vp = require(g.raw_moment(c.p), "XMPCI needs E X^p");
      pl.a = pick(xmpci_bound(vp, shape, c.p), c.p);
      pl.stated = xmpci_bound(vp, *pl.a, c.p);
      break;
    }
    case BoundId::TracePcheb: {
      if (!(c.p >= 1.0)) throw ConfigError("TRACE_PCHEB needs p >= 1");
      const SymMat vp = require(g.central_abs_moment(c.p), "TRACE_PCHEB needs a central p-th moment");
      const double tr = trace(vp);
      if (!(tr > 0.0)) throw IncompatiblePair("degenerate law");
      pl.a_scalar = std::pow(tr / c.target, 1.0 / c.p);
      pl.stated = trace_pcheb_bound(tr, pl.a_scalar, c.p);
      break;
    }
    case BoundId::Ursn: {
      require_iid(g, "URSN");
      if (!g.symmetric_deviation()) throw IncompatiblePair("URSN needs symmetric deviations");
      pl.v = require(g.variance(), "URSN needs a finite variance");
      if (!(c.target < 1.0)) throw ConfigError("URSN level must lie in (0, 1)");
      pl.gamma = c.gamma.value_or(0.5);
      if (!(pl.gamma > 0.0)) throw ConfigError("URSN needs gamma > 0");
      pl.a_scalar = c.target;
      pl.stated = c.target;
      break;
    }
    case BoundId::Usmhi: {
      require_iid(g, "USMHI");
      if (!g.symmetric_deviation()) throw IncompatiblePair("USMHI needs symmetric deviations");
      pl.v = require(g.deviation_square_bound(), "USMHI needs (X - M)² ⪯ B");
      if (!(c.target < 1.0)) throw ConfigError("USMHI level must lie in (0, 1)");
      pl.gamma = c.gamma.value_or(0.5);
      if (!(pl.gamma > 0.0)) throw ConfigError("USMHI needs gamma > 0");
      pl.a_scalar = c.target;
      pl.stated = c.target;
      break;
    }
  }
  if (pl.a) pl.sqrt_a = mat_sqrt(*pl.a);
  return pl;
}

struct TrialEvents {
  bool event = false;
  bool unrandomized = false;
  long stop = 0;
};

class Trial {
 public:
  Trial(const Plan& pl, const CoverageCase& c, const McConfig& mc, const MatrixRandomizer& base_u,
        std::int64_t t)
      : pl_(pl),
        g_(*c.generator),
        mc_(mc),
        data_(make_rng(mc.seed, static_cast<std::uint64_t>(t), stream::kData)),
        stop_(make_rng(mc.seed, static_cast<std::uint64_t>(t), stream::kStopping)),
        randomizer_(base_u.for_trial(static_cast<std::uint64_t>(t))) {
    Rng latent_rng = make_rng(mc.seed, static_cast<std::uint64_t>(t), stream::kLatent);
    latent_ = g_.begin_path(latent_rng);
    u_ = randomizer_.sample();
    dominance_ = mc.check_dominance && is_randomizable(pl.bound) && randomizer_.dominated_by_identity();
  }

  bool dominance_checked() const { return dominance_; }

  TrialEvents run() {
    switch (pl_.bound) {
      case BoundId::Ummi: {
        const SymMat x = draw();
        return pair([&](const SymMat& u) { return ummi_event_sqrt(x, *pl_.sqrt_a, u); });
      }
      case BoundId::Umci1:
      case BoundId::UmciN: {
        const SymMat xbar = sample_mean(pl_.n);
        return pair([&](const SymMat& u) { return chebyshev1_event(xbar, pl_.mean, *pl_.a, u); });
      }
      case BoundId::Pcheb1: {
        const SymMat x = draw();
        return pair([&](const SymMat& u) { return pcheb1_event(x, pl_.mean, *pl_.a, u, pl_.p); });
      }
      case BoundId::Chernoff1: {
        const SymMat x = draw();
        return pair([&](const SymMat& u) { return chernoff1_event(x, *pl_.a, u, pl_.gamma); });
      }
      case BoundId::ChernoffHoeffding: {
        const SymMat dev = sample_mean(pl_.n) - pl_.mean;
        return pair([&](const SymMat& u) {
          return chernoff_hoeffding_event(dev, pl_.a_scalar, pl_.gamma, u);
        });
      }
      case BoundId::VecPcheb: {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(pl_.d);
        for (long i = 0; i < pl_.n; ++i) s += (draw() - pl_.mean).matrix().diagonal();
        const bool e = s.norm() >= static_cast<double>(pl_.n) * pl_.a_scalar;
        return {e, e, pl_.n};
      }
      case BoundId::SpectralPcheb: {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pl_.d, pl_.d);
        for (long i = 0; i < pl_.n; ++i) s += (draw() - pl_.mean).matrix();
        const bool e = spectral_norm(SymMat(s)) >= static_cast<double>(pl_.n) * pl_.a_scalar;
        return {e, e, pl_.n};
      }
      case BoundId::Umvi:
      case BoundId::Mvi:
      case BoundId::EprocessMin:
        return run_ville();
      case BoundId::Doob: {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pl_.d, pl_.d);
        for (long n = 1; n <= mc_.n_max; ++n) {
          s += (draw() - pl_.mean).matrix();
          if (!loewner_leq(symmetrize_product(s * s), *pl_.a)) return {true, true, n};
        }
        return {false, false, mc_.n_max};
      }
      case BoundId::Xmci:
      case BoundId::Xmci2:
      case BoundId::Xmpci:
      case BoundId::TracePcheb:
        return run_exchangeable();
      case BoundId::Ursn:
      case BoundId::Usmhi:
        return run_scalar();
    }
    return {};
  }

 private:
  SymMat draw() { return g_.draw(data_, latent_); }

  SymMat sample_mean(long n) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pl_.d, pl_.d);
    for (long i = 0; i < n; ++i) s += draw().matrix();
    return symmetrize_product(s / static_cast<double>(n));
  }

  template <class F>
  TrialEvents pair(F&& event) {
    const bool e = event(u_);
    const bool e1 = dominance_ ? event(SymMat::identity(pl_.d)) : e;
    return {e, e1, pl_.n};
  }

  // Stopping time drawn before the path: fixed N or geometric. First crossing returns N as a cap.
  long stop_cap() {
    if (mc_.stopping.kind != StoppingKind::Geometric) return mc_.n_max;
    std::geometric_distribution<long> geo(mc_.stopping.geometric_p);
    return std::min(mc_.n_max, 1 + geo(stop_));
  }

  // MVI is time-uniform with U = I. The stopped bounds evaluate U only at τ, where τ is a
  // stopping time of the data: fixed, independent geometric, or the first crossing of the U = I
  // threshold (capped at N).
  bool time_uniform() const { return pl_.bound == BoundId::Mvi; }

  bool first_crossing() const {
    return time_uniform() || mc_.stopping.kind == StoppingKind::FirstCrossing;
  }

  TrialEvents run_ville() {
    const long cap = time_uniform() ? mc_.n_max : stop_cap();
    std::vector<FactorStream> streams;
    std::vector<MatSupermartingale> procs;
    for (const auto& bp : pl_.builders) {
      streams.emplace_back(bp, GammaSchedule::constant(pl_.gamma));
      procs.emplace_back(pl_.d);
    }
    const bool crossing = first_crossing();
    for (long n = 1; n <= cap; ++n) {
      const SymMat x = draw();
      for (std::size_t k = 0; k < procs.size(); ++k) procs[k].step(streams[k].next(x));
      if (!crossing && n < cap) continue;
      const SymMat y = procs.size() == 1 ? procs[0].value()
                                         : eprocess_min(std::span<const MatSupermartingale>(procs));
      const bool plain = !loewner_leq(y, *pl_.a);
      if (crossing && !plain && n < cap) continue;
      if (time_uniform()) return {plain, plain, n};
      const bool e = plain || !loewner_leq(y, congruence(pl_.sqrt_a->matrix(), u_));
      return {e, dominance_ ? plain : e, n};
    }
    return {};
  }

  TrialEvents run_scalar() {
    const double u = u_(0, 0);
    const double alpha = pl_.a_scalar;
    const long cap = stop_cap();
    const bool crossing = first_crossing();
    TraceExpState st(pl_.d);
    st.set_warning_sink([](const std::string&) {});
    auto hit = [&](double level) {
      if (pl_.bound == BoundId::Ursn) return ursn_event(st, alpha, level);
      if (!(level > 0.0)) return true;
      return usmhi_event(weighted_mean_deviation(st), usmhi_threshold(st, alpha, level));
    };
    for (long n = 1; n <= cap; ++n) {
      const SymMat x = draw();
      if (pl_.bound == BoundId::Ursn) {
        st.sn_step(x, pl_.mean, *pl_.v, pl_.gamma);
      } else {
        st.hoeffding_step(x, pl_.mean, *pl_.v, pl_.gamma);
      }
      if (!crossing && n < cap) continue;
      const bool plain = hit(1.0);
      if (crossing && !plain && n < cap) continue;
      const bool e = plain || hit(u);
      return {e, dominance_ ? plain : e, n};
    }
    return {};
  }

  TrialEvents run_exchangeable() {
    std::vector<SymMat> xs;
    xs.reserve(static_cast<std::size_t>(mc_.n_max));
    for (long n = 0; n < mc_.n_max; ++n) xs.push_back(draw());
    bool e = false;
    switch (pl_.bound) {
      case BoundId::Xmci:
      case BoundId::Xmci2:
        e = xmci_event(xs, pl_.mean, *pl_.a, mc_.n_max, pl_.n);
        break;
      case BoundId::Xmpci:
        e = xmpci_event(xs, *pl_.a, pl_.p, mc_.n_max);
        break;
      case BoundId::TracePcheb:
        e = trace_pcheb_event(xs, pl_.mean, pl_.a_scalar, pl_.p, mc_.n_max);
        break;
      default:
        break;
    }
    return {e, e, mc_.n_max};
  }

  const Plan& pl_;
  const Generator& g_;
  const McConfig& mc_;
  Rng data_;
  Rng stop_;
  MatrixRandomizer randomizer_;
  PathLatent latent_;
  SymMat u_ = SymMat::identity(1);
  bool dominance_ = false;
};

MatrixRandomizer make_randomizer(const CoverageCase& c, Eigen::Index d, std::uint64_t seed) {
  switch (c.randomizer) {
    case MatrixRandomizer::Kind::Identity:
      return MatrixRandomizer::identity(d);
    case MatrixRandomizer::Kind::ScaledIdentity:
      return MatrixRandomizer::scaled_identity(d, seed);
    case MatrixRandomizer::Kind::Shifted:
      return MatrixRandomizer::shifted(*c.randomizer_shift, seed);
  }
  return MatrixRandomizer::identity(d);
}

}  // namespace

void check_compatibility(const CoverageCase& c, const McConfig& mc) { (void)make_plan(c, mc); }

CoverageResult run_coverage(const CoverageCase& c, const McConfig& mc) {
  mc.validate();
  const Plan pl = make_plan(c, mc);
  const MatrixRandomizer base_u = make_randomizer(c, pl.d, c.randomizer_seed.value_or(mc.seed));
  const bool randomizable = is_randomizable(c.bound);

  struct Counts {
    std::int64_t events = 0;
    std::int64_t checked = 0;
    std::int64_t violations = 0;
  };
  const int workers = static_cast<int>(std::min<std::int64_t>(mc.workers, mc.trials));
  std::vector<Counts> counts(static_cast<std::size_t>(workers));
  std::vector<TrialOutcome> outcomes;
  if (mc.record_outcomes) outcomes.resize(static_cast<std::size_t>(mc.trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));

  auto work = [&](int w) {
    try {
      const std::int64_t lo = mc.trials * w / workers;
      const std::int64_t hi = mc.trials * (w + 1) / workers;
      Counts& cnt = counts[static_cast<std::size_t>(w)];
      for (std::int64_t t = lo; t < hi; ++t) {
        Trial trial(pl, c, mc, base_u, t);
        const TrialEvents ev = trial.run();
        cnt.events += ev.event ? 1 : 0;
        if (trial.dominance_checked()) {
          ++cnt.checked;
          if (ev.unrandomized && !ev.event) ++cnt.violations;
        }
        if (mc.record_outcomes) {
          outcomes[static_cast<std::size_t>(t)] = {t, ev.event, ev.unrandomized, ev.stop};
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& th : threads) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Counts total;
  for (const auto& cnt : counts) {
    total.events += cnt.events;
    total.checked += cnt.checked;
    total.violations += cnt.violations;
  }
  CoverageResult res;
  res.report = make_report(c.label.empty() ? auto_label(c, mc) : c.label, mc.trials, total.events,
                           pl.stated, pl.alternative);
  if (randomizable) {
    res.report.dominance_checked = total.checked;
    res.report.dominance_violations = total.violations;
  }
  res.outcomes = std::move(outcomes);
  res.threshold = pl.a;
  res.threshold_scalar = pl.a_scalar;
  res.gamma = pl.gamma;
  return res;
}

std::string outcomes_csv(const std::vector<TrialOutcome>& outcomes) {
  std::string out = "trial,event,event_unrandomized,stop\n";
  for (const auto& o : outcomes) {
    out += fmt::format("{},{},{},{}\n", o.trial, o.event ? 1 : 0, o.event_unrandomized ? 1 : 0, o.stop);
  }
  return out;
}

}  // namespace matconc
