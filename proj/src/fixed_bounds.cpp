#include "matconc/fixed_bounds.hpp"

#include <cmath>

#include <fmt/format.h>

namespace matconc {

void require_positive_definite(const SymMat& a, const char* what) {
  if (!is_positive_definite(a)) {
    throw DomainError(fmt::format("{}: threshold must be positive definite", what));
  }
}

void require_p_in_unit_range(double p, const char* what) {
  if (!(p >= 1.0 && p <= 2.0)) {
    throw DomainError(fmt::format("{}: p = {} outside [1, 2]", what, p));
  }
}

double trace_product(const SymMat& p, const SymMat& q) {
  require_same_dim(p, q, "trace_product");
  return p.matrix().cwiseProduct(q.matrix()).sum();
}

bool ummi_event_sqrt(const SymMat& x, const SymMat& sqrt_a, const SymMat& u,
                     const ToleranceConfig& tol) {
  return !loewner_leq(x, congruence(sqrt_a, u), tol);
}

bool ummi_event(const SymMat& x, const SymMat& a, const SymMat& u, const ToleranceConfig& tol) {
  require_same_dim(x, a, "ummi_event");
  require_same_dim(x, u, "ummi_event");
  require_positive_definite(a, "ummi_event");
  return ummi_event_sqrt(x, mat_sqrt(a), u, tol);
}

double ummi_bound(const SymMat& ex, const SymMat& a) {
  require_same_dim(ex, a, "ummi_bound");
  require_positive_definite(a, "ummi_bound");
  if (!is_psd(ex)) throw DomainError("ummi_bound: E[X] must be positive semidefinite");
  return trace_product(ex, mat_inverse(a));
}

bool chebyshev1_event(const SymMat& x, const SymMat& m, const SymMat& a, const SymMat& u,
                      const ToleranceConfig& tol) {
  require_same_dim(x, m, "chebyshev1_event");
  require_same_dim(x, a, "chebyshev1_event");
  require_same_dim(x, u, "chebyshev1_event");
  require_positive_definite(a, "chebyshev1_event");
  const SymMat thr = mat_sqrt(congruence(a, u), tol);
  return !loewner_leq(mat_abs(x - m), thr, tol);
}

double chebyshev1_bound(const SymMat& v, const SymMat& a) {
  require_same_dim(v, a, "chebyshev1_bound");
  require_positive_definite(a, "chebyshev1_bound");
  if (!is_psd(v)) throw DomainError("chebyshev1_bound: V must be positive semidefinite");
  return trace_product(v, mat_pow(a, -2.0));
}

double chebyshev_n_bound(const SymMat& v, const SymMat& a, long n) {
  if (n < 1) throw DomainError("chebyshev_n_bound: n must be at least 1");
  return chebyshev1_bound(v, a) / static_cast<double>(n);
}

bool pcheb1_event(const SymMat& x, const SymMat& m, const SymMat& a, const SymMat& u, double p,
                  const ToleranceConfig& tol) {
  require_p_in_unit_range(p, "pcheb1_event");
  require_same_dim(x, m, "pcheb1_event");
  require_same_dim(x, a, "pcheb1_event");
  require_same_dim(x, u, "pcheb1_event");
  require_positive_definite(a, "pcheb1_event");
  const SymMat inner = congruence(mat_pow(a, p / 2.0, tol), u);
  const SymMat thr = mat_pow(inner, 1.0 / p, tol);
  return !loewner_leq(mat_abs(x - m), thr, tol);
}

double pcheb1_bound(const SymMat& vp, const SymMat& a, double p) {
  require_p_in_unit_range(p, "pcheb1_bound");
  require_same_dim(vp, a, "pcheb1_bound");
  require_positive_definite(a, "pcheb1_bound");
  if (!is_psd(vp)) throw DomainError("pcheb1_bound: Vp must be positive semidefinite");
  return trace_product(vp, mat_pow(a, -p));
}

std::optional<SymMat> chernoff1_threshold(const SymMat& a, const SymMat& u, double gamma,
                                          const ToleranceConfig& tol) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("chernoff1: gamma must be positive and finite");
  }
  require_same_dim(a, u, "chernoff1_threshold");
  const SymMat inner = congruence(mat_exp(gamma * a), u);
  if (!is_positive_definite(inner)) return std::nullopt;
  return mat_log(inner, tol) / (2.0 * gamma);
}

bool chernoff1_event(const SymMat& x, const SymMat& a, const SymMat& u, double gamma,
                     const ToleranceConfig& tol) {
  require_same_dim(x, a, "chernoff1_event");
  const auto thr = chernoff1_threshold(a, u, gamma, tol);
  if (!thr) return true;
  return !loewner_leq(x, *thr, tol);
}

double chernoff1_bound(const SymMat& e_exp_2gx, const SymMat& a, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("chernoff1: gamma must be positive and finite");
  }
  require_same_dim(e_exp_2gx, a, "chernoff1_bound");
  return trace_product(mat_exp(-2.0 * gamma * a), e_exp_2gx);
}

SymMat estimate_exp_moment(std::span<const SymMat> xs, double gamma) {
  if (xs.empty()) throw DomainError("estimate_exp_moment: no samples");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(xs[0].dim(), xs[0].dim());
  for (const SymMat& x : xs) {
    require_same_dim(x, xs[0], "estimate_exp_moment");
    acc += mat_exp(2.0 * gamma * x).matrix();
  }
  return SymMat(acc / static_cast<double>(xs.size()));
}

std::string to_string(MgfKind k) {
  switch (k) {
    case MgfKind::Rademacher:
      return "rademacher";
    case MgfKind::UniGaussian:
      return "uni_gaussian";
    case MgfKind::BennettI:
      return "bennett1";
    case MgfKind::BennettII:
      return "bennett2";
    case MgfKind::SymmetricHoeffding:
      return "symmetric_hoeffding";
  }
  return "rademacher";
}

MgfKind parse_mgf_kind(const std::string& s) {
  if (s == "rademacher") return MgfKind::Rademacher;
  if (s == "uni_gaussian" || s == "gaussian") return MgfKind::UniGaussian;
  if (s == "bennett1" || s == "bennett_i") return MgfKind::BennettI;
  if (s == "bennett2" || s == "bennett_ii") return MgfKind::BennettII;
  if (s == "symmetric_hoeffding" || s == "hoeffding") return MgfKind::SymmetricHoeffding;
  throw ConfigError(fmt::format("unknown MGF row '{}'", s));
}

void MgfParams::validate() const {
  switch (kind) {
    case MgfKind::Rademacher:
    case MgfKind::UniGaussian:
      if (!c) throw ParamMismatch(fmt::format("MGF row {} needs C", to_string(kind)));
      break;
    case MgfKind::BennettI:
    case MgfKind::BennettII:
      if (!v) throw ParamMismatch(fmt::format("MGF row {} needs V", to_string(kind)));
      if (!is_psd(*v)) throw ParamMismatch("Bennett V must be positive semidefinite");
      break;
    case MgfKind::SymmetricHoeffding:
      if (!b) throw ParamMismatch("MGF row symmetric_hoeffding needs B");
      if (!is_psd(*b)) throw ParamMismatch("Hoeffding B must be positive semidefinite");
      break;
  }
}

Eigen::Index MgfParams::dim() const {
  validate();
  switch (kind) {
    case MgfKind::Rademacher:
    case MgfKind::UniGaussian:
      return c->dim();
    case MgfKind::BennettI:
    case MgfKind::BennettII:
      return v->dim();
    case MgfKind::SymmetricHoeffding:
      return b->dim();
  }
  return 0;
}

namespace {

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("MGF bound: gamma must be positive and finite");
  }
}

// e^x - x - 1 without cancellation near zero.
double bennett_phi(double x) {
  if (std::abs(x) >= 1.0) return std::expm1(x) - x;
  // x² Σ x^k/(k+2)!, no cancellation
  double term = 0.5, sum = 0.0;
  for (int k = 0; k < 30 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
    sum += term;
    term *= x / (k + 3);
  }
  return x * x * sum;
}

}  // namespace

double mgf_log_trace_bound(const MgfParams& params, double gamma, long n) {
  params.validate();
  require_gamma(gamma);
  if (n < 1) throw DomainError("MGF bound: n must be at least 1");
  const double nn = static_cast<double>(n);
  switch (params.kind) {
    case MgfKind::Rademacher:
    case MgfKind::UniGaussian:
      return log_trace_exp(mat_square(*params.c) * (gamma * gamma / (2.0 * nn)));
    case MgfKind::BennettI:
    case MgfKind::BennettII:
      return log_trace_exp(*params.v * (nn * bennett_phi(gamma / nn)));
    case MgfKind::SymmetricHoeffding:
      return log_trace_exp(*params.b * (gamma * gamma / (2.0 * nn)));
  }
  return 0.0;
}

double mgf_trace_bound(const MgfParams& params, double gamma, long n) {
  return std::exp(mgf_log_trace_bound(params, gamma, n));
}

SymMat mgf_matrix(const MgfParams& params, double gamma) {
  params.validate();
  if (!std::isfinite(gamma)) throw DomainError("MGF matrix: gamma must be finite");
  switch (params.kind) {
    case MgfKind::Rademacher:
    case MgfKind::UniGaussian:
      return mat_exp(mat_square(*params.c) * (gamma * gamma / 2.0));
    case MgfKind::BennettI:
    case MgfKind::BennettII:
      return mat_exp(*params.v * bennett_phi(gamma));
    case MgfKind::SymmetricHoeffding:
      throw ParamMismatch(
          "symmetric Hoeffding only bounds the log-MGF; no matrix MGF bound is available");
  }
  return SymMat::identity(1);
}

bool chernoff_hoeffding_event(const SymMat& mean_deviation, double a, double gamma,
                              const SymMat& u, const ToleranceConfig& tol) {
  require_gamma(gamma);
  require_same_dim(mean_deviation, u, "chernoff_hoeffding_event");
  if (!is_positive_definite(u)) return true;
  const SymMat thr = SymMat::scaled_identity(u.dim(), a) + mat_log(u, tol) / gamma;
  return !loewner_leq(mean_deviation, thr, tol);
}

bool chernoff_hoeffding_event(std::span<const SymMat> xs, const SymMat& m, double a, double gamma,
                              const SymMat& u, const ToleranceConfig& tol) {
  if (xs.empty()) throw DomainError("chernoff_hoeffding_event: no observations");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m.dim(), m.dim());
  for (const SymMat& x : xs) {
    require_same_dim(x, m, "chernoff_hoeffding_event");
    acc += x.matrix();
  }
  const SymMat dev = SymMat(acc / static_cast<double>(xs.size())) - m;
  return chernoff_hoeffding_event(dev, a, gamma, u, tol);
}

double chernoff_hoeffding_bound(const MgfParams& params, double gamma, long n, double a) {
  if (!(a > 0.0)) throw DomainError("chernoff_hoeffding_bound: a must be positive");
  return std::exp(mgf_log_trace_bound(params, gamma, n) - gamma * a);
}

namespace {

void require_vector_args(double vp, long d, long n, double p, const char* what) {
  require_p_in_unit_range(p, what);
  if (d < 1 || n < 1) throw DomainError(fmt::format("{}: d and n must be at least 1", what));
  if (!(vp >= 0.0)) throw DomainError(fmt::format("{}: moment must be nonnegative", what));
}

}  // namespace

double vector_pcheb_moment_bound(double vp, long d, long n, double p) {
  require_vector_args(vp, d, n, p, "vector_pcheb");
  return std::pow(2.0, 2.0 - p) * std::pow(static_cast<double>(d), 1.0 - p / 2.0) *
         static_cast<double>(n) * vp;
}

double vector_pcheb_bound(double vp, long d, long n, double p, double a) {
  if (!(a > 0.0)) throw DomainError("vector_pcheb: a must be positive");
  return vector_pcheb_moment_bound(vp, d, n, p) / std::pow(static_cast<double>(n) * a, p);
}

double spectral_pcheb_moment_bound(double vp_spec, long d, long n, double p) {
  require_vector_args(vp_spec, d, n, p, "spectral_pcheb");
  return std::pow(2.0, 2.0 - p) * std::pow(static_cast<double>(d), 2.0 - p / 2.0) *
         static_cast<double>(n) * vp_spec;
}

double spectral_pcheb_bound(double vp_spec, long d, long n, double p, double a) {
  if (!(a > 0.0)) throw DomainError("spectral_pcheb: a must be positive");
  return spectral_pcheb_moment_bound(vp_spec, d, n, p) / std::pow(static_cast<double>(n) * a, p);
}

}  // namespace matconc
