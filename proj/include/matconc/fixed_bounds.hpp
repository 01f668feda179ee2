#pragma once

#include <optional>
#include <span>
#include <string>

#include "matconc/symmat.hpp"

namespace matconc {

/// Requires A positive definite; raises DomainError otherwise.
void require_positive_definite(const SymMat& a, const char* what);
/// Requires 1 <= p <= 2.
void require_p_in_unit_range(double p, const char* what);

/// tr(P Q) for symmetric P, Q.
double trace_product(const SymMat& p, const SymMat& q);

// Markov: X ⋠ A^{1/2} U A^{1/2}, Pr <= tr(E[X] A^{-1}).
bool ummi_event(const SymMat& x, const SymMat& a, const SymMat& u, const ToleranceConfig& tol = {});
/// Same event with A^{1/2} already computed.
bool ummi_event_sqrt(const SymMat& x, const SymMat& sqrt_a, const SymMat& u,
                     const ToleranceConfig& tol = {});
double ummi_bound(const SymMat& ex, const SymMat& a);

// Chebyshev: abs(X - M) ⋠ (A U A)^{1/2}, Pr <= tr(V A^{-2}) [/ n for a mean of n].
bool chebyshev1_event(const SymMat& x, const SymMat& m, const SymMat& a, const SymMat& u,
                      const ToleranceConfig& tol = {});
double chebyshev1_bound(const SymMat& v, const SymMat& a);
double chebyshev_n_bound(const SymMat& v, const SymMat& a, long n);

// p-Chebyshev: abs(X - M) ⋠ (A^{p/2} U A^{p/2})^{1/p}, Pr <= tr(Vp A^{-p}).
bool pcheb1_event(const SymMat& x, const SymMat& m, const SymMat& a, const SymMat& u, double p,
                  const ToleranceConfig& tol = {});
double pcheb1_bound(const SymMat& vp, const SymMat& a, double p);

// One-matrix Chernoff: X ⋠ log(e^{γA} U e^{γA}) / (2γ), Pr <= tr(e^{-2γA} E e^{2γX}).
/// The threshold, or nullopt when e^{γA} U e^{γA} is singular (the event is then taken to occur).
std::optional<SymMat> chernoff1_threshold(const SymMat& a, const SymMat& u, double gamma,
                                          const ToleranceConfig& tol = {});
bool chernoff1_event(const SymMat& x, const SymMat& a, const SymMat& u, double gamma,
                     const ToleranceConfig& tol = {});
double chernoff1_bound(const SymMat& e_exp_2gx, const SymMat& a, double gamma);
/// Sample mean of exp(2γ X_i); the resulting bound is an estimate.
SymMat estimate_exp_moment(std::span<const SymMat> xs, double gamma);

enum class MgfKind { Rademacher, UniGaussian, BennettI, BennettII, SymmetricHoeffding };

std::string to_string(MgfKind k);
MgfKind parse_mgf_kind(const std::string& s);

/// Parameters of one row of the MGF menu: C for Rademacher / uni-Gaussian,
/// V for Bennett I/II, B for symmetric Hoeffding.
struct MgfParams {
  MgfKind kind = MgfKind::Rademacher;
  std::optional<SymMat> c;
  std::optional<SymMat> v;
  std::optional<SymMat> b;

  void validate() const;  // ParamMismatch
  Eigen::Index dim() const;
};

/// log tr exp(n log G(γ/n)), upper bound per row.
double mgf_log_trace_bound(const MgfParams& params, double gamma, long n);
double mgf_trace_bound(const MgfParams& params, double gamma, long n);
/// The matrix G(γ) ⪰ E e^{γ(X - M)}. Not available for symmetric Hoeffding,
/// whose row only bounds the log-MGF.
SymMat mgf_matrix(const MgfParams& params, double gamma);

// Chernoff-Hoeffding: X̄_n - M ⋠ a I + log(U)/γ, Pr <= tr e^{n log G(γ/n)} e^{-γa}.
bool chernoff_hoeffding_event(const SymMat& mean_deviation, double a, double gamma,
                              const SymMat& u, const ToleranceConfig& tol = {});
bool chernoff_hoeffding_event(std::span<const SymMat> xs, const SymMat& m, double a, double gamma,
                              const SymMat& u, const ToleranceConfig& tol = {});
double chernoff_hoeffding_bound(const MgfParams& params, double gamma, long n, double a);

/// Vector p-Chebyshev: Pr(||x̄_n - μ|| >= a) <= 2^{2-p} d^{1-p/2} v_p / (n^{p-1} a^p).
double vector_pcheb_bound(double vp, long d, long n, double p, double a);
/// E||x_1 + ... + x_n - nμ||^p <= 2^{2-p} d^{1-p/2} n v_p.
double vector_pcheb_moment_bound(double vp, long d, long n, double p);

/// E||X_1 + ... + X_n - nM||^p <= 2^{2-p} d^{2-p/2} n v_p (operator norm).
double spectral_pcheb_moment_bound(double vp_spec, long d, long n, double p);
/// Pr(||X̄_n - M|| >= a) implied by the moment bound.
double spectral_pcheb_bound(double vp_spec, long d, long n, double p, double a);

}  // namespace matconc
