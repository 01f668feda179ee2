#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matconc/fixed_bounds.hpp"
#include "matconc/rng.hpp"
#include "matconc/symmat.hpp"

namespace matconc {

/// Predictable step sizes γ_n, n = 1, 2, ...
class GammaSchedule {
 public:
  enum class Kind { Constant, List, InvSqrt, Custom };

  static GammaSchedule constant(double gamma);
  /// Entries past the end repeat the last one.
  static GammaSchedule list(std::vector<double> gammas);
  /// γ_n = c / sqrt(n).
  static GammaSchedule inv_sqrt(double c);
  static GammaSchedule custom(std::function<double(long)> f);

  Kind kind() const { return kind_; }
  double at(long n) const;

 private:
  Kind kind_ = Kind::Constant;
  double c_ = 0.0;
  std::vector<double> list_;
  std::function<double(long)> f_;
};

enum class BuilderKind { Mgf, Betting, SelfNormalized, Symmetric };

std::string to_string(BuilderKind k);
BuilderKind parse_builder_kind(const std::string& s);

/// One step of a test supermartingale: E[E_n | past] ⪯ A_n^{-1}.
struct Factors {
  SymMat e;
  SymMat a;
  // Square roots when the builder gets them for free from its decomposition.
  std::optional<SymMat> sqrt_e;
  std::optional<SymMat> sqrt_a;
};

/// E = e^{γ(X - M)}, A = G(γ)^{-1}.
Factors build_mgf(const SymMat& x, const SymMat& m, const MgfParams& row, double gamma);
/// E = I + γ(X - M), A = I, with -1/λmax(B - M) < γ < 1/λmax(M).
Factors build_betting(const SymMat& x, const SymMat& m, const SymMat& b, double gamma,
                      const ToleranceConfig& tol = {});
/// E = exp(γ(X - M) - γ²(X - M)²/6), A = exp(-γ² V / 3).
Factors build_self_normalized(const SymMat& x, const SymMat& m, const SymMat& v, double gamma);
/// E = exp(γ(X - M) - γ²(X - M)²/2), A = I.
Factors build_symmetric(const SymMat& x, const SymMat& m, double gamma);

/// Open interval of admissible betting fractions.
std::pair<double, double> betting_gamma_range(const SymMat& m, const SymMat& b);

/// Builder configuration with constant M, B, V.
struct BuilderParams {
  BuilderKind kind = BuilderKind::Mgf;
  SymMat mean = SymMat::zero(1);
  std::optional<MgfParams> mgf;     // Mgf
  std::optional<SymMat> upper;      // Betting: B
  std::optional<SymMat> variance;   // SelfNormalized: V

  void validate() const;  // ParamMismatch
};

/// Emits (E_n, A_n) for successive observations.
class FactorStream {
 public:
  FactorStream(BuilderParams params, GammaSchedule schedule);

  Factors next(const SymMat& x);
  long steps() const { return n_; }
  const BuilderParams& params() const { return params_; }
  double gamma_at(long n) const { return schedule_.at(n); }

 private:
  BuilderParams params_;
  GammaSchedule schedule_;
  long n_ = 0;
  std::optional<SymMat> cached_a_;  // A_n is deterministic for constant schedules
  double cached_gamma_ = 0.0;
};

/// Matrix supermartingale kept as its left factor L_n = √A_1 √E_1 ... √A_n √E_n,
/// with Y_n = L_n L_n^T and Y_0 = I.
class MatSupermartingale {
 public:
  explicit MatSupermartingale(Eigen::Index dim);

  void step(const SymMat& e, const SymMat& a, const ToleranceConfig& tol = {});
  /// Uses the precomputed square roots when present.
  void step(const Factors& f, const ToleranceConfig& tol = {});

  long n() const { return n_; }
  Eigen::Index dim() const { return left_.rows(); }
  const Eigen::MatrixXd& left_product() const { return left_; }
  SymMat value() const;

 private:
  Eigen::MatrixXd left_;
  long n_ = 0;
};

/// Y_n from the full product √A_1√E_1 ... √E_n √E_n ... √E_1√A_1.
SymMat supermartingale_from_scratch(std::span<const Factors> factors);

/// Y ⋠ A^{1/2} U A^{1/2}.
bool ville_event(const SymMat& y, const SymMat& a, const SymMat& u, const ToleranceConfig& tol = {});
/// tr(E[Y_0] A^{-1}).
double ville_bound(const SymMat& y0_mean, const SymMat& a);

/// Left fold of ⋎ over the current values.
SymMat eprocess_min(std::span<const SymMat> values, const ToleranceConfig& tol = {});
SymMat eprocess_min(std::span<const MatSupermartingale> processes, const ToleranceConfig& tol = {});

/// ∃ n <= N with Y_n ⋠ A.
bool doob_event(std::span<const SymMat> history, const SymMat& a, const ToleranceConfig& tol = {});
double doob_bound(const SymMat& ey_n, const SymMat& a);

/// Running average of a sequence.
class ExchangeableAvg {
 public:
  explicit ExchangeableAvg(Eigen::Index dim);
  void push(const SymMat& x);
  long n() const { return n_; }
  SymMat mean() const;

 private:
  Eigen::MatrixXd sum_;
  long n_ = 0;
};

/// ∃ n in [first_n, N_max] with abs(X̄_n - M) ⋠ A.
bool xmci_event(std::span<const SymMat> xs, const SymMat& m, const SymMat& a, long n_max,
                long first_n = 1, const ToleranceConfig& tol = {});
double xmci_bound(const SymMat& v, const SymMat& a);
double xmci2_bound(const SymMat& v, const SymMat& a, long big_n);

/// ∃ n <= N_max with X̄_n ⋠ A (PSD observations).
bool xmpci_event(std::span<const SymMat> xs, const SymMat& a, double p, long n_max,
                 const ToleranceConfig& tol = {});
/// tr(Vp A^{-p}), Vp the raw p-th moment.
double xmpci_bound(const SymMat& vp_raw, const SymMat& a, double p);

/// tr(abs(D)^p).
double trace_abs_pow(const SymMat& d, double p);
/// ∃ n <= N_max with tr(abs(X̄_n - M)^p) >= a^p.
bool trace_pcheb_event(std::span<const SymMat> xs, const SymMat& m, double a, double p, long n_max);
double trace_pcheb_bound(double tr_vp, double a, double p);

/// Estimate of E[(X̄_n - C)^p | exchangeable σ-algebra of the first n + 1]
/// by averaging over `perms` random permutations of xs[0..n].
SymMat exchangeable_conditional_mean(std::span<const SymMat> xs_first_n_plus_1, const SymMat& c,
                                     double p, int perms, Rng& rng);

}  // namespace matconc
