#include "matconc/scalar_e.hpp"

#include <cmath>
#include <iostream>

#include <fmt/format.h>

#include "matconc/fixed_bounds.hpp"

namespace matconc {

double psi_quadratic(double gamma) { return gamma * gamma / 2.0; }

TraceExpState::TraceExpState(Eigen::Index dim)
    : d_(dim),
      gz_(Eigen::MatrixXd::Zero(dim, dim)),
      gz_c_(Eigen::MatrixXd::Zero(dim, dim)),
      pen_(Eigen::MatrixXd::Zero(dim, dim)),
      pen_c_(Eigen::MatrixXd::Zero(dim, dim)),
      sum_g2b_(Eigen::MatrixXd::Zero(dim, dim)),
      sink_([](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }) {
  if (dim < 1) throw DimMismatch("dimension must be at least 1");
}

void TraceExpState::kahan_add(Eigen::MatrixXd& sum, Eigen::MatrixXd& comp,
                              const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd y = x - comp;
  const Eigen::MatrixXd t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

SymMat TraceExpState::weighted_sum() const { return symmetrize_product(gz_); }
SymMat TraceExpState::penalty_sum() const { return symmetrize_product(pen_); }
SymMat TraceExpState::s() const { return symmetrize_product(gz_ - pen_); }

double TraceExpState::log_value() const {
  if (n_ == 0) return std::log(static_cast<double>(d_));
  return log_trace_exp(s());
}

double TraceExpState::value() const {
  if (n_ == 0) return static_cast<double>(d_);
  return std::exp(log_value());
}

double TraceExpState::log_lower_bound() const {
  return lambda_max(weighted_sum()) - lambda_max(penalty_sum());
}

void TraceExpState::te_step(const SymMat& z, const SymMat& c, const SymMat& c_prime, double gamma,
                            const Psi& psi) {
  if (z.dim() != d_ || c.dim() != d_ || c_prime.dim() != d_) {
    throw DimMismatch("te_step: dimension mismatch");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("te_step: gamma must be > 0");
  const double w = psi(gamma);
  kahan_add(gz_, gz_c_, gamma * z.matrix());
  kahan_add(pen_, pen_c_, w * (c.matrix() + c_prime.matrix()));
  const double y = gamma - sum_gamma_c_;
  const double t = sum_gamma_ + y;
  sum_gamma_c_ = (t - sum_gamma_) - y;
  sum_gamma_ = t;
  ++n_;
}

void TraceExpState::sn_step(const SymMat& x, const SymMat& m, const SymMat& v, double gamma) {
  require_same_dim(x, m, "sn_step");
  require_same_dim(x, v, "sn_step");
  const SymMat z = x - m;
  te_step(z, mat_square(z) / 3.0, v * (2.0 / 3.0), gamma);
}

void TraceExpState::hoeffding_step(const SymMat& x, const SymMat& m, const SymMat& b,
                                   double gamma) {
  require_same_dim(x, b, "hoeffding_step");
  const SymMat z = x - m;
  if (!loewner_leq(mat_square(z), b)) {
    ++violations_;
    if (sink_) {
      sink_(fmt::format("step {}: (X - M)^2 is not below B; the Hoeffding e-process is not valid",
                        n_ + 1));
    }
  }
  sn_step(x, m, b, gamma);
  sum_g2b_ += gamma * gamma * b.matrix();
}

double hoeffding_eprocess_log_value(const TraceExpState& state) {
  return lambda_max(state.weighted_sum()) -
         0.5 * lambda_max(symmetrize_product(state.sum_gamma_sq_b()));
}

double hoeffding_eprocess_value(const TraceExpState& state) {
  return std::exp(hoeffding_eprocess_log_value(state));
}

bool ursn_event(const TraceExpState& state, double alpha, double u) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(u > 0.0)) return true;
  return state.log_value() >= std::log(static_cast<double>(state.dim()) * u / alpha);
}

double usmhi_threshold(std::span<const double> gammas, std::span<const SymMat> bs, double alpha,
                       double u, Eigen::Index d) {
  if (gammas.empty() || gammas.size() != bs.size()) {
    throw DomainError("usmhi_threshold: need one B per gamma");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(u > 0.0)) throw DomainError("u must be positive");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  double sg = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw DomainError("gammas must be positive");
    if (bs[i].dim() != d) throw DimMismatch("usmhi_threshold: B dimension");
    acc += gammas[i] * gammas[i] * bs[i].matrix();
    sg += gammas[i];
  }
  return (std::log(static_cast<double>(d) * u / alpha) + 0.5 * lambda_max(symmetrize_product(acc))) /
         sg;
}

double usmhi_threshold(const TraceExpState& state, double alpha, double u) {
  if (state.n() == 0) throw DomainError("usmhi_threshold: no steps taken");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(u > 0.0)) throw DomainError("u must be positive");
  return (std::log(static_cast<double>(state.dim()) * u / alpha) +
          0.5 * lambda_max(symmetrize_product(state.sum_gamma_sq_b()))) /
         state.sum_gamma();
}

bool usmhi_event(const SymMat& weighted_mean_deviation, double threshold) {
  return lambda_max(weighted_mean_deviation) >= threshold;
}

SymMat weighted_mean_deviation(const TraceExpState& state) {
  if (state.n() == 0) throw DomainError("weighted_mean_deviation: no steps taken");
  return state.weighted_sum() / state.sum_gamma();
}

TestConfig TestConfig::from_shape(double alpha, const SymMat& shape) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!is_positive_definite(shape)) throw ConfigError("threshold shape must be positive definite");
  const double t = trace(mat_inverse(shape));
  TestConfig cfg;
  cfg.alpha = alpha;
  cfg.a_thresh = shape * (t / alpha);
  cfg.validate();
  return cfg;
}

TestConfig TestConfig::isotropic(double alpha, Eigen::Index d) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  return TestConfig{alpha, SymMat::scaled_identity(d, static_cast<double>(d) / alpha)};
}

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!is_positive_definite(a_thresh)) throw ConfigError("threshold must be positive definite");
  const double t = trace(mat_inverse(a_thresh));
  if (std::abs(t - alpha) > 1e-10 * std::max(1.0, alpha)) {
    throw ConfigError(fmt::format("tr(A^-1) = {:.17g} differs from alpha = {:.17g}", t, alpha));
  }
}

bool matrix_test_decide(const SymMat& y, const TestConfig& cfg, const ToleranceConfig& tol) {
  cfg.validate();
  require_same_dim(y, cfg.a_thresh, "matrix_test_decide");
  return !loewner_leq(y, cfg.a_thresh, tol);
}

bool scalar_test_decide(double l, Eigen::Index d, double alpha, double u) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  return l >= static_cast<double>(d) * u / alpha;
}

SymMat oracle_A_choice(const SymMat& y1, double alpha, double epsilon) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionFailed("alpha must lie in (0, 1)");
  const Eigen::Index d = y1.dim();
  if (d < 2) throw PreconditionFailed("oracle_A_choice needs d >= 2");
  const SpectralDecomp dec = decompose(y1);
  const double top = dec.eigenvalues(d - 1);
  if (!(top > 1.0 / alpha)) {
    throw PreconditionFailed(
        fmt::format("lambda_max(Y1) = {:.17g} must exceed 1/alpha = {:.17g}", top, 1.0 / alpha));
  }
  const double eps_hi = alpha - 1.0 / top;
  if (!(epsilon > 0.0 && epsilon < eps_hi)) {
    throw PreconditionFailed(
        fmt::format("epsilon = {:.17g} outside (0, {:.17g})", epsilon, eps_hi));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(d, static_cast<double>(d - 1) / epsilon);
  w(d - 1) = 1.0 / (alpha - epsilon);
  return detail::assemble(dec.eigenvectors, w);
}

SymMat matrix_only_rejection_fixture(const TestConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = cfg.a_thresh.dim();
  const SpectralDecomp dec = decompose(cfg.a_thresh);
  const double l1 = dec.eigenvalues(0);
  const double eps = 0.01 * (static_cast<double>(d) / cfg.alpha - l1) / static_cast<double>(d);
  const Eigen::VectorXd q = dec.eigenvectors.col(0);
  return l1 * SymMat::outer(q) + SymMat::scaled_identity(d, eps);
}

SymMat scalar_only_rejection_fixture(const TestConfig& cfg) {
  cfg.validate();
  return 0.9 * cfg.a_thresh;
}

}  // namespace matconc
