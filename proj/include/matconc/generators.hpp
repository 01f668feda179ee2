#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "matconc/rng.hpp"
#include "matconc/symmat.hpp"

namespace matconc {

enum class GeneratorKind {
  RademacherScaled,
  GaussianScaled,
  BoundedPsd,
  SymmetricHeavy,
  HeavyPsd,
  ExchangeableMixture,
  IidWishartLike,
  EllipsoidRank1,
  RandomSignSpectral,
};

std::string to_string(GeneratorKind k);
GeneratorKind parse_generator_kind(const std::string& s);

/// Per-path latent variables (only the exchangeable mixture uses them).
struct PathLatent {
  double xi = 0.0;
};

using WeightedSupport = std::vector<std::pair<double, SymMat>>;

/// Random symmetric matrix law with the moments needed by the bounds.
/// Every moment accessor returns nullopt when the quantity is infinite or
/// has no closed form for this law.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual GeneratorKind kind() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual SymMat mean() const = 0;

  virtual PathLatent begin_path(Rng& /*rng*/) const { return {}; }
  virtual SymMat draw(Rng& rng, const PathLatent& latent) const = 0;
  SymMat draw(Rng& rng) const { return draw(rng, begin_path(rng)); }
  std::vector<SymMat> path(long n, Rng& rng) const;

  /// Finite support with probabilities, when the law is discrete.
  virtual std::optional<WeightedSupport> support() const { return std::nullopt; }
  /// E f(X), exact or by quadrature.
  virtual std::optional<SymMat> expect(const std::function<SymMat(const SymMat&)>& f) const;

  /// E (X - M)²
  virtual std::optional<SymMat> variance() const { return central_abs_moment(2.0); }
  /// E abs(X - M)^p
  virtual std::optional<SymMat> central_abs_moment(double p) const;
  /// E X^p (PSD laws)
  virtual std::optional<SymMat> raw_moment(double p) const;
  /// E ||X - M||^p, operator norm
  virtual std::optional<double> spectral_central_moment(double p) const;
  /// E ||diag(X - M)||^p, Euclidean norm of the diagonal
  virtual std::optional<double> vector_central_moment(double p) const;

  virtual bool psd_valued() const { return false; }
  /// B with X ⪯ B almost surely.
  virtual std::optional<SymMat> upper_bound() const { return std::nullopt; }
  /// B with (X - M)² ⪯ B almost surely.
  virtual std::optional<SymMat> deviation_square_bound() const { return std::nullopt; }
  /// c with λmax(X - M) <= c almost surely.
  virtual std::optional<double> deviation_lambda_max_bound() const { return std::nullopt; }
  /// X - M has the law of M - X.
  virtual bool symmetric_deviation() const { return false; }
  virtual bool iid() const { return true; }
};

using GeneratorPtr = std::shared_ptr<const Generator>;

/// X = M + r C, r Rademacher.
GeneratorPtr make_rademacher_scaled(const SymMat& c, const SymMat& m);
/// X = M + g C, g standard normal.
GeneratorPtr make_gaussian_scaled(const SymMat& c, const SymMat& m);
/// 0 ⪯ X ⪯ B with E X = M, via Bernoulli patterns in the basis of B^{-1/2} M B^{-1/2}.
GeneratorPtr make_bounded_psd(const SymMat& b, const SymMat& m);
/// X = M + s S + c r I, s symmetric Lomax with tail index t, r Rademacher.
GeneratorPtr make_symmetric_heavy(const SymMat& s, const SymMat& m, double tail, double iso = 0.0);
/// X = s P, s >= 0 Lomax with tail index t, P PSD.
GeneratorPtr make_heavy_psd(const SymMat& p, double tail);
/// X_n = M + ξ D + g_n C with ξ = ±1 drawn once per path.
GeneratorPtr make_exchangeable_mixture(const SymMat& m, const SymMat& d, const SymMat& c);
/// X = M^{1/2} g g^T M^{1/2}, g standard normal vector.
GeneratorPtr make_iid_wishart_like(const SymMat& m);
/// X = x x^T, x = A^{1/2} r w, w uniform on the sphere, r = U^k.
GeneratorPtr make_ellipsoid_rank1(const SymMat& a, double radius_power = 1.0);
/// X = M + Σ r_i c_i q_i q_i^T over the eigenpairs of C, so (X - M)² = C².
GeneratorPtr make_random_sign_spectral(const SymMat& c, const SymMat& m);

/// E|g|^p for g standard normal.
double gaussian_abs_moment(double p);
/// E s^q for s >= 0 Lomax with tail index t (infinite when q >= t).
double lomax_moment(double q, double tail);
/// Probabilists' Gauss-Hermite rule: nodes and weights for the standard normal.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n);

}  // namespace matconc
