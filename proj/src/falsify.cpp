#include "matconc/falsify.hpp"

#include <cmath>

#include <fmt/format.h>

#include "matconc/report.hpp"
#include "matconc/rng.hpp"

namespace matconc {

void FalsifyConfig::validate() const {
  if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("falsify: p must lie in [1, 2]");
  if (d < 1) throw ConfigError("falsify: d must be at least 1");
  if (budget < 1) throw ConfigError("falsify: budget must be at least 1");
  if (refine_steps < 0) throw ConfigError("falsify: refine_steps must be nonnegative");
  if (n_min < 1 || n_max < n_min || n_max > 6) throw ConfigError("falsify: need 1 <= n_min <= n_max <= 6");
  if (m_max < 1 || m_max > 4) throw ConfigError("falsify: need 1 <= m_max <= 4");
  if (candidate_f && !(*candidate_f > 0.0)) throw ConfigError("falsify: candidate f must be positive");
}

FalsifyInstance evaluate_instance(const std::vector<SymMat>& c, long n, double p) {
  if (c.empty()) throw DomainError("falsify: empty support");
  if (n < 1) throw DomainError("falsify: n must be at least 1");
  const Eigen::Index d = c[0].dim();
  std::vector<Eigen::MatrixXd> atoms;
  Eigen::MatrixXd vp = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ci : c) {
    if (ci.dim() != d) throw DimMismatch("falsify: instance dimensions differ");
    atoms.push_back(ci.matrix());
    atoms.push_back(-ci.matrix());
    vp += mat_pow(mat_abs(ci), p).matrix();
  }
  vp /= static_cast<double>(c.size());
  const std::size_t k = atoms.size();
  std::size_t outcomes = 1;
  for (long i = 0; i < n; ++i) outcomes *= k;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  for (std::size_t t = 0; t < outcomes; ++t) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    for (long i = 0; i < n; ++i) sum += atoms[digit[static_cast<std::size_t>(i)]];
    e += mat_pow(mat_abs(SymMat(sum)), p).matrix();
    for (std::size_t i = 0; i < digit.size() && ++digit[i] == k; ++i) digit[i] = 0;
  }
  e /= static_cast<double>(outcomes);
  const double nn = static_cast<double>(n);
  FalsifyInstance out;
  out.c = c;
  out.n = n;
  const double tv = vp.trace();
  out.trace_ratio = tv > 0.0 ? e.trace() / (nn * tv) : 0.0;
  const SymMat v(vp);
  if (is_positive_definite(v) && lambda_max(v) / lambda_min(v) < 1e10) {
    out.loewner_ratio = lambda_max(congruence(mat_pow(v, -0.5).matrix(), SymMat(e))) / nn;
  } else {
    out.loewner_ratio = out.trace_ratio;
  }
  return out;
}

namespace {

SymMat random_sym(Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = std_normal(rng);
  }
  return SymMat(m);
}

bool better(const FalsifyInstance& a, const FalsifyInstance& b) {
  return a.loewner_ratio > b.loewner_ratio;
}

}  // namespace

FalsifyResult falsify_conjecture(const FalsifyConfig& cfg) {
  cfg.validate();
  FalsifyResult res;
  res.p = cfg.p;
  res.d = cfg.d;
  res.candidate_f = cfg.candidate_f.value_or(std::pow(2.0, 2.0 - cfg.p));
  Rng rng = make_rng(cfg.seed, 0, stream::kData);
  std::uniform_int_distribution<int> pick_n(cfg.n_min, cfg.n_max);
  std::uniform_int_distribution<int> pick_m(1, cfg.m_max);
  bool have = false;
  for (long k = 0; k < cfg.budget; ++k) {
    const int n = pick_n(rng);
    const int m = pick_m(rng);
    std::vector<SymMat> c;
    for (int i = 0; i < m; ++i) c.push_back(random_sym(cfg.d, rng));
    FalsifyInstance inst = evaluate_instance(c, n, cfg.p);
    ++res.evaluated;
    if (!have || better(inst, res.best)) {
      res.best = std::move(inst);
      have = true;
    }
  }
  double step = 0.3;
  for (long k = 0; k < cfg.refine_steps; ++k) {
    std::vector<SymMat> c = res.best.c;
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng);
    c[i] = c[i] + step * random_sym(cfg.d, rng);
    FalsifyInstance inst = evaluate_instance(c, res.best.n, cfg.p);
    ++res.evaluated;
    if (better(inst, res.best)) {
      res.best = std::move(inst);
    } else if ((k + 1) % 200 == 0) {
      step *= 0.7;
    }
  }
  res.exceeds_candidate = res.best.loewner_ratio > res.candidate_f * (1.0 + 1e-9);
  return res;
}

std::string to_json(const FalsifyResult& r, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  std::string inst = "[";
  for (std::size_t i = 0; i < r.best.c.size(); ++i) {
    const auto& m = r.best.c[i].matrix();
    inst += i ? ", [" : "[";
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      inst += a ? ", [" : "[";
      for (Eigen::Index b = 0; b < m.cols(); ++b) inst += (b ? ", " : "") + format_double(m(a, b));
      inst += "]";
    }
    inst += "]";
  }
  inst += "]";
  std::string out = "{\n";
  out += fmt::format("{}\"p\": {},\n", pad, format_double(r.p));
  out += fmt::format("{}\"d\": {},\n", pad, r.d);
  out += fmt::format("{}\"candidate_f\": {},\n", pad, format_double(r.candidate_f));
  out += fmt::format("{}\"evaluated\": {},\n", pad, r.evaluated);
  out += fmt::format("{}\"n\": {},\n", pad, r.best.n);
  out += fmt::format("{}\"support_size\": {},\n", pad, r.best.c.size());
  out += fmt::format("{}\"trace_ratio\": {},\n", pad, format_double(r.best.trace_ratio));
  out += fmt::format("{}\"loewner_ratio\": {},\n", pad, format_double(r.best.loewner_ratio));
  out += fmt::format("{}\"exceeds_candidate\": {},\n", pad, r.exceeds_candidate ? "true" : "false");
  out += fmt::format("{}\"instance\": {},\n", pad, inst);
  out += fmt::format("{}\"note\": \"largest ratio found by search; not a proof\"\n", pad);
  out += "}\n";
  return out;
}

}  // namespace matconc
