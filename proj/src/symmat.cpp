#include "matconc/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace matconc {

void ToleranceConfig::validate() const {
  for (double t : {tol_psd, tol_reconstruct, tol_ortho}) {
    if (!std::isfinite(t) || t < 0.0) {
      throw ConfigError("tolerances must be finite and nonnegative");
    }
  }
}

SymMat::SymMat(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimMismatch(fmt::format("matrix must be square, got {}x{}", m.rows(), m.cols()));
  }
  if (m.rows() < 1) throw DimMismatch("matrix dimension must be at least 1");
  if (!m.allFinite()) throw DomainError("matrix has non-finite entries");
  m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::zero(Index d) {
  if (d < 1) throw DimMismatch("matrix dimension must be at least 1");
  return SymMat(Eigen::MatrixXd::Zero(d, d), Trusted{});
}

SymMat SymMat::identity(Index d) {
  if (d < 1) throw DimMismatch("matrix dimension must be at least 1");
  return SymMat(Eigen::MatrixXd::Identity(d, d), Trusted{});
}

SymMat SymMat::scaled_identity(Index d, double c) {
  if (!std::isfinite(c)) throw DomainError("non-finite scale");
  return SymMat(c * Eigen::MatrixXd::Identity(d, d), Trusted{});
}

SymMat SymMat::diagonal(std::span<const double> diag) {
  Eigen::VectorXd v(static_cast<Index>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) v(static_cast<Index>(i)) = diag[i];
  return SymMat(Eigen::MatrixXd(v.asDiagonal()));
}

SymMat SymMat::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

SymMat SymMat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto d = static_cast<Index>(rows.size());
  Eigen::MatrixXd m(d, d);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != d) throw DimMismatch("ragged matrix literal");
    Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return SymMat(m);
}

SymMat SymMat::outer(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw DomainError("non-finite vector");
  return SymMat(Eigen::MatrixXd(v * v.transpose()));
}

SymMat operator+(const SymMat& a, const SymMat& b) {
  require_same_dim(a, b, "operator+");
  return SymMat(a.m_ + b.m_, SymMat::Trusted{});
}

SymMat operator-(const SymMat& a, const SymMat& b) {
  require_same_dim(a, b, "operator-");
  return SymMat(a.m_ - b.m_, SymMat::Trusted{});
}

SymMat operator-(const SymMat& a) { return SymMat(-a.m_, SymMat::Trusted{}); }

SymMat operator*(double s, const SymMat& a) {
  if (!std::isfinite(s)) throw DomainError("non-finite scale");
  return SymMat(s * a.m_, SymMat::Trusted{});
}

SymMat symmetrize_product(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw DomainError("matrix product overflowed");
  return SymMat(Eigen::MatrixXd(0.5 * (m + m.transpose())), SymMat::Trusted{});
}

void require_same_dim(const SymMat& a, const SymMat& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimMismatch(fmt::format("{}: dimensions {} and {} differ", what, a.dim(), b.dim()));
  }
}

SymMat SpectralDecomp::reconstruct() const {
  return detail::assemble(eigenvectors, eigenvalues);
}

SpectralDecomp decompose(const SymMat& a) {
  if (a.dim() == 1) {
    return {Eigen::VectorXd::Constant(1, a(0, 0)), Eigen::MatrixXd::Identity(1, 1)};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd eigenvalues(const SymMat& a) {
  if (a.dim() == 1) return Eigen::VectorXd::Constant(1, a(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition did not converge");
  return solver.eigenvalues();
}

namespace detail {

void check_domain(Eigen::VectorXd& lambda, const SpectralDomain& dom,
                  const ToleranceConfig& tol) {
  if (!std::isfinite(dom.lower)) return;
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    double& l = lambda(i);
    if (dom.clamp && l < dom.lower && l >= dom.lower - tol.tol_psd * scale) l = dom.lower;
    if (l < dom.lower || (dom.strict && l <= dom.lower)) {
      throw DomainError(
          fmt::format("eigenvalue {:.17g} outside spectral domain (lower bound {:.17g})", l,
                      dom.lower));
    }
  }
}

SymMat assemble(const Eigen::MatrixXd& q, const Eigen::VectorXd& f_lambda) {
  if (q.rows() == 1) return SymMat::scaled_identity(1, f_lambda(0));
  return symmetrize_product(q * f_lambda.asDiagonal() * q.transpose());
}

}  // namespace detail

SymMat mat_exp(const SymMat& a) {
  return apply_spectral(a, [](double x) { return std::exp(x); });
}

SymMat mat_log(const SymMat& a, const ToleranceConfig& tol) {
  return apply_spectral(a, [](double x) { return std::log(x); }, SpectralDomain::positive(), tol);
}

SymMat mat_abs(const SymMat& a) {
  return apply_spectral(a, [](double x) { return std::abs(x); });
}

SymMat mat_sqrt(const SymMat& a, const ToleranceConfig& tol) {
  return apply_spectral(a, [](double x) { return std::sqrt(x); }, SpectralDomain::nonnegative(),
                        tol);
}

SymMat mat_pow(const SymMat& a, double k, const ToleranceConfig& tol) {
  if (!std::isfinite(k)) throw DomainError("non-finite exponent");
  const bool integral = std::floor(k) == k;
  if (k == 0.0) return SymMat::identity(a.dim());
  if (k == 1.0) return a;
  if (k == 2.0) return mat_square(a);
  if (integral && k > 0.0) {
    return apply_spectral(a, [k](double x) { return std::pow(x, k); });
  }
  if (k > 0.0) {
    return apply_spectral(a, [k](double x) { return std::pow(x, k); },
                          SpectralDomain::nonnegative(), tol);
  }
  const SpectralDecomp dec = decompose(a);
  const double lo = dec.eigenvalues(0);
  const double hi = dec.eigenvalues(dec.eigenvalues.size() - 1);
  if (!(lo > kLogFloor)) {
    throw DomainError(fmt::format("negative power of a matrix with eigenvalue {:.17g}", lo));
  }
  if (hi / lo > kMaxConditionNumber) {
    throw DomainError(fmt::format("condition number {:.3g} exceeds {:.0e}", hi / lo,
                                  kMaxConditionNumber));
  }
  return apply_spectral(dec, [k](double x) { return std::pow(x, k); });
}

SymMat mat_inverse(const SymMat& a) { return mat_pow(a, -1.0); }

SymMat mat_square(const SymMat& a) { return symmetrize_product(a.matrix() * a.matrix()); }

double lambda_max(const SymMat& a) {
  const Eigen::VectorXd ev = eigenvalues(a);
  return ev(ev.size() - 1);
}

double lambda_min(const SymMat& a) { return eigenvalues(a)(0); }

double trace(const SymMat& a) { return a.matrix().trace(); }

double spectral_norm(const SymMat& a) {
  const Eigen::VectorXd ev = eigenvalues(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double log_trace_exp(const SymMat& a) {
  const Eigen::VectorXd ev = eigenvalues(a);
  const double top = ev(ev.size() - 1);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) s += std::exp(ev(i) - top);
  return top + std::log(s);
}

bool loewner_leq(const SymMat& a, const SymMat& b, const ToleranceConfig& tol) {
  require_same_dim(a, b, "loewner_leq");
  return is_psd(b - a, tol);
}

bool is_psd(const SymMat& a, const ToleranceConfig& tol) {
  const Eigen::VectorXd ev = eigenvalues(a);
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol.tol_psd * std::max(1.0, norm);
}

bool is_positive_definite(const SymMat& a) { return lambda_min(a) > kLogFloor; }

SymMat anticommutator(const SymMat& a, const SymMat& b) {
  require_same_dim(a, b, "anticommutator");
  const Eigen::MatrixXd ab = a.matrix() * b.matrix();
  return symmetrize_product(ab + ab.transpose());
}

SymMat congruence(const Eigen::MatrixXd& m, const SymMat& x) {
  if (m.rows() != x.dim() || m.cols() != x.dim()) {
    throw DimMismatch("congruence: factor and matrix dimensions differ");
  }
  return symmetrize_product(m * x.matrix() * m.transpose());
}

SymMat curlyvee(const SymMat& a, const SymMat& b, const ToleranceConfig& tol) {
  require_same_dim(a, b, "curlyvee");
  if (loewner_leq(a, b, tol)) return a;
  return a - SymMat::scaled_identity(a.dim(), lambda_max(a - b));
}

}  // namespace matconc
