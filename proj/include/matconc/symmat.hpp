#pragma once

#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "matconc/errors.hpp"

namespace matconc {

/// Slack used by Loewner-order predicates and the spectral checks.
struct ToleranceConfig {
  double tol_psd = 1e-8;
  double tol_reconstruct = 1e-9;
  double tol_ortho = 1e-9;

  void validate() const;
};

/// Smallest eigenvalue accepted by log and by negative powers.
inline constexpr double kLogFloor = 1e-30;
/// Largest condition number accepted when inverting.
inline constexpr double kMaxConditionNumber = 1e12;

/// Dense real symmetric matrix. Symmetry is exact: the constructor replaces
/// its argument by (M + M^T) / 2 and rejects non-finite entries.
class SymMat {
 public:
  using Index = Eigen::Index;

  explicit SymMat(const Eigen::MatrixXd& m);

  static SymMat zero(Index d);
  static SymMat identity(Index d);
  static SymMat scaled_identity(Index d, double c);
  static SymMat diagonal(std::span<const double> diag);
  static SymMat diagonal(std::initializer_list<double> diag);
  static SymMat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// v v^T
  static SymMat outer(const Eigen::VectorXd& v);

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

  friend SymMat operator+(const SymMat& a, const SymMat& b);
  friend SymMat operator-(const SymMat& a, const SymMat& b);
  friend SymMat operator-(const SymMat& a);
  friend SymMat operator*(double s, const SymMat& a);
  friend SymMat operator*(const SymMat& a, double s) { return s * a; }
  friend SymMat operator/(const SymMat& a, double s) { return (1.0 / s) * a; }

  /// Exact entrywise equality.
  friend bool operator==(const SymMat& a, const SymMat& b) { return a.m_ == b.m_; }

 private:
  struct Trusted {};
  SymMat(Eigen::MatrixXd m, Trusted) : m_(std::move(m)) {}

  friend SymMat symmetrize_product(const Eigen::MatrixXd& m);

  Eigen::MatrixXd m_;
};

/// Symmetric part of an arbitrary square matrix (for products that are
/// symmetric in exact arithmetic).
SymMat symmetrize_product(const Eigen::MatrixXd& m);

void require_same_dim(const SymMat& a, const SymMat& b, const char* what);

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
struct SpectralDecomp {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  SymMat reconstruct() const;
};

SpectralDecomp decompose(const SymMat& a);
Eigen::VectorXd eigenvalues(const SymMat& a);

/// Domain declared by a scalar function for spectral application.
/// Eigenvalues below `lower` (or equal to it, when `strict`) are rejected,
/// except that `clamp` pulls values within tol_psd of `lower` up to it.
struct SpectralDomain {
  double lower = -std::numeric_limits<double>::infinity();
  bool strict = false;
  bool clamp = false;

  static SpectralDomain real_line() { return {}; }
  static SpectralDomain nonnegative() { return {0.0, false, true}; }
  static SpectralDomain positive(double floor = kLogFloor) { return {floor, false, false}; }
};

namespace detail {
void check_domain(Eigen::VectorXd& lambda, const SpectralDomain& dom,
                  const ToleranceConfig& tol);
SymMat assemble(const Eigen::MatrixXd& q, const Eigen::VectorXd& f_lambda);
}  // namespace detail

/// Q f(Lambda) Q^T for an already computed decomposition.
template <class F>
SymMat apply_spectral(const SpectralDecomp& dec, F&& f, const SpectralDomain& dom = {},
                      const ToleranceConfig& tol = {}) {
  Eigen::VectorXd lambda = dec.eigenvalues;
  detail::check_domain(lambda, dom, tol);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda(i) = f(lambda(i));
  return detail::assemble(dec.eigenvectors, lambda);
}

template <class F>
SymMat apply_spectral(const SymMat& a, F&& f, const SpectralDomain& dom = {},
                      const ToleranceConfig& tol = {}) {
  return apply_spectral(decompose(a), std::forward<F>(f), dom, tol);
}

SymMat mat_exp(const SymMat& a);
SymMat mat_log(const SymMat& a, const ToleranceConfig& tol = {});
SymMat mat_abs(const SymMat& a);
SymMat mat_sqrt(const SymMat& a, const ToleranceConfig& tol = {});
/// Real power. Integer k >= 0 accepts any spectrum; non-integer k > 0
/// requires a PSD argument (clamped like sqrt); k < 0 requires a positive
/// definite argument with condition number at most kMaxConditionNumber.
SymMat mat_pow(const SymMat& a, double k, const ToleranceConfig& tol = {});
SymMat mat_inverse(const SymMat& a);
/// A * A, formed by direct multiplication.
SymMat mat_square(const SymMat& a);

double lambda_max(const SymMat& a);
double lambda_min(const SymMat& a);
double trace(const SymMat& a);
double spectral_norm(const SymMat& a);
/// log tr exp(A), evaluated with a max-eigenvalue shift.
double log_trace_exp(const SymMat& a);

/// A ⪯ B: lambda_min(B - A) >= -tol_psd * max(1, ||B - A||).
bool loewner_leq(const SymMat& a, const SymMat& b, const ToleranceConfig& tol = {});
bool is_psd(const SymMat& a, const ToleranceConfig& tol = {});
/// Every eigenvalue strictly above kLogFloor.
bool is_positive_definite(const SymMat& a);

SymMat anticommutator(const SymMat& a, const SymMat& b);
/// M X M^T, symmetrized.
SymMat congruence(const Eigen::MatrixXd& m, const SymMat& x);
inline SymMat congruence(const SymMat& s, const SymMat& x) { return congruence(s.matrix(), x); }

/// Matrix minimum: A when A ⪯ B, otherwise A - lambda_max(A - B) I.
/// The result is a common Loewner lower bound of A and B.
SymMat curlyvee(const SymMat& a, const SymMat& b, const ToleranceConfig& tol = {});

}  // namespace matconc
