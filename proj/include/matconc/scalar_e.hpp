#pragma once

#include <functional>
#include <span>
#include <string>

#include "matconc/symmat.hpp"

namespace matconc {

/// ψ(γ) = γ²/2.
double psi_quadratic(double gamma);

/// L_n = tr exp(S_n), S_n = Σ γ_i Z_i - Σ ψ(γ_i)(C_i + C_i'), with L_0 = d.
/// Both sums are kept with compensated (Kahan) summation.
class TraceExpState {
 public:
  using Psi = std::function<double(double)>;
  using WarningSink = std::function<void(const std::string&)>;

  explicit TraceExpState(Eigen::Index dim);

  Eigen::Index dim() const { return d_; }
  long n() const { return n_; }
  double sum_gamma() const { return sum_gamma_; }

  /// Σ γ_i Z_i
  SymMat weighted_sum() const;
  /// Σ ψ(γ_i)(C_i + C_i')
  SymMat penalty_sum() const;
  SymMat s() const;
  /// Σ γ_i² B_i (Hoeffding steps only).
  const Eigen::MatrixXd& sum_gamma_sq_b() const { return sum_g2b_; }

  double log_value() const;  // log L_n, overflow-safe
  double value() const;      // L_n
  /// log of exp(λmax(Σγ Z) - λmax(Σψ(C + C'))), a pathwise lower bound of L_n.
  double log_lower_bound() const;

  /// C' must be fixed before Z is observed; γ > 0.
  void te_step(const SymMat& z, const SymMat& c, const SymMat& c_prime, double gamma,
               const Psi& psi = psi_quadratic);
  /// Self-normalized instance: Z = X - M, C = Z²/3, C' = 2V/3, ψ = x²/2.
  void sn_step(const SymMat& x, const SymMat& m, const SymMat& v, double gamma);
  /// sn_step with V := B, plus the Σγ²B accumulator. A realized (X - M)² ⋠ B
  /// is reported to the warning sink and counted.
  void hoeffding_step(const SymMat& x, const SymMat& m, const SymMat& b, double gamma);

  long assumption_violations() const { return violations_; }
  void set_warning_sink(WarningSink sink) { sink_ = std::move(sink); }

 private:
  static void kahan_add(Eigen::MatrixXd& sum, Eigen::MatrixXd& comp, const Eigen::MatrixXd& x);

  Eigen::Index d_;
  Eigen::MatrixXd gz_, gz_c_;
  Eigen::MatrixXd pen_, pen_c_;
  Eigen::MatrixXd sum_g2b_;
  double sum_gamma_ = 0.0;
  double sum_gamma_c_ = 0.0;
  long n_ = 0;
  long violations_ = 0;
  WarningSink sink_;
};

/// exp(λmax(Σγ_i(X_i - M_i)) - λmax(Σγ_i² B_i)/2).
double hoeffding_eprocess_value(const TraceExpState& state);
double hoeffding_eprocess_log_value(const TraceExpState& state);

/// L_τ >= d u / α.
bool ursn_event(const TraceExpState& state, double alpha, double u);

/// (log(d u/α) + λmax(Σγ²B)/2) / Σγ.
double usmhi_threshold(std::span<const double> gammas, std::span<const SymMat> bs, double alpha,
                       double u, Eigen::Index d);
double usmhi_threshold(const TraceExpState& state, double alpha, double u);
/// λmax(X̄^γ - M̄^γ) >= threshold.
bool usmhi_event(const SymMat& weighted_mean_deviation, double threshold);
/// X̄^γ - M̄^γ from the running sums.
SymMat weighted_mean_deviation(const TraceExpState& state);

/// Matrix test threshold with tr(A^{-1}) = α.
struct TestConfig {
  double alpha = 0.05;
  SymMat a_thresh = SymMat::identity(1);

  /// Rescales `shape` so that tr(A^{-1}) = α.
  static TestConfig from_shape(double alpha, const SymMat& shape);
  /// A = (d/α) I.
  static TestConfig isotropic(double alpha, Eigen::Index d);
  void validate() const;  // ConfigError
};

/// Y_n ⋠ A; requires tr(A^{-1}) = α.
bool matrix_test_decide(const SymMat& y, const TestConfig& cfg, const ToleranceConfig& tol = {});
/// L_n >= d u / α.
bool scalar_test_decide(double l, Eigen::Index d, double alpha, double u = 1.0);

/// A = ε^{-1}(d-1)(P_1 + ... + P_{d-1}) + (α - ε)^{-1} P_d from the spectral
/// projectors of a known Y_1; tr(A^{-1}) = α and Y_1 ⋠ A.
SymMat oracle_A_choice(const SymMat& y1, double alpha, double epsilon);

/// λ_1 P_1 + ε I with ε = 0.01 (d/α - λ_1)/d: the matrix test rejects, the scalar one does not.
SymMat matrix_only_rejection_fixture(const TestConfig& cfg);
/// 0.9 A: the scalar test rejects, the matrix one does not.
SymMat scalar_only_rejection_fixture(const TestConfig& cfg);

}  // namespace matconc
