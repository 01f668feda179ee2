#include "matconc/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

namespace matconc {

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::RademacherScaled: return "RADEMACHER_SCALED";
    case GeneratorKind::GaussianScaled: return "GAUSSIAN_SCALED";
    case GeneratorKind::BoundedPsd: return "BOUNDED_PSD";
    case GeneratorKind::SymmetricHeavy: return "SYMMETRIC_HEAVY";
    case GeneratorKind::HeavyPsd: return "HEAVY_PSD";
    case GeneratorKind::ExchangeableMixture: return "EXCHANGEABLE_MIXTURE";
    case GeneratorKind::IidWishartLike: return "IID_WISHART_LIKE";
    case GeneratorKind::EllipsoidRank1: return "ELLIPSOID_RANK1";
    case GeneratorKind::RandomSignSpectral: return "RANDOM_SIGN_SPECTRAL";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& s) {
  for (auto k : {GeneratorKind::RademacherScaled, GeneratorKind::GaussianScaled,
                 GeneratorKind::BoundedPsd, GeneratorKind::SymmetricHeavy, GeneratorKind::HeavyPsd,
                 GeneratorKind::ExchangeableMixture, GeneratorKind::IidWishartLike,
                 GeneratorKind::EllipsoidRank1, GeneratorKind::RandomSignSpectral}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError(fmt::format("unknown generator kind '{}'", s));
}

double gaussian_abs_moment(double p) {
  return std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

double lomax_moment(double q, double tail) {
  if (q >= tail) return std::numeric_limits<double>::infinity();
  if (q == 0.0) return 1.0;
  return std::exp(std::lgamma(q + 1.0) + std::lgamma(tail - q) - std::lgamma(tail));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k - 1, k) = j(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Eigen::VectorXd w = es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

std::vector<SymMat> Generator::path(long n, Rng& rng) const {
  const PathLatent latent = begin_path(rng);
  std::vector<SymMat> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, n)));
  for (long i = 0; i < n; ++i) out.push_back(draw(rng, latent));
  return out;
}

std::optional<SymMat> Generator::expect(const std::function<SymMat(const SymMat&)>& f) const {
  const auto sup = support();
  if (!sup) return std::nullopt;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& [w, x] : *sup) acc += w * f(x).matrix();
  return SymMat(acc);
}

std::optional<SymMat> Generator::central_abs_moment(double p) const {
  const SymMat m = mean();
  return expect([&](const SymMat& x) { return mat_pow(mat_abs(x - m), p); });
}

std::optional<SymMat> Generator::raw_moment(double p) const {
  if (!psd_valued()) return std::nullopt;
  return expect([&](const SymMat& x) { return mat_pow(x, p); });
}

std::optional<double> Generator::spectral_central_moment(double p) const {
  const SymMat m = mean();
  const auto r = expect([&](const SymMat& x) {
    return SymMat::scaled_identity(1, std::pow(spectral_norm(x - m), p));
  });
  if (!r) return std::nullopt;
  return (*r)(0, 0);
}

std::optional<double> Generator::vector_central_moment(double p) const {
  const SymMat m = mean();
  const auto r = expect([&](const SymMat& x) {
    return SymMat::scaled_identity(1, std::pow((x - m).matrix().diagonal().norm(), p));
  });
  if (!r) return std::nullopt;
  return (*r)(0, 0);
}

namespace {

constexpr int kHermiteNodes = 48;

const std::pair<Eigen::VectorXd, Eigen::VectorXd>& hermite_rule() {
  static const auto rule = gauss_hermite(kHermiteNodes);
  return rule;
}

// E h(m) for m >= 0 Lomax with tail index t, integrated in u = (1 + m)^{-t}.
double lomax_expect(const std::function<double(double)>& h, double tail) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(
      [&](double u) {
        if (u <= 0.0) return 0.0;
        return h(std::pow(u, -1.0 / tail) - 1.0);
      },
      0.0, 1.0);
}

// Enumerate 2^d sign or Bernoulli patterns.
template <class F>
void for_each_pattern(Eigen::Index d, F&& f) {
  const unsigned long n = 1UL << d;
  for (unsigned long mask = 0; mask < n; ++mask) {
    Eigen::VectorXi bits(d);
    for (Eigen::Index i = 0; i < d; ++i) bits(i) = static_cast<int>((mask >> i) & 1UL);
    f(bits);
  }
}

constexpr Eigen::Index kMaxEnumerationDim = 16;

class RademacherScaled final : public Generator {
 public:
  RademacherScaled(SymMat c, SymMat m) : c_(std::move(c)), m_(std::move(m)) {
    require_same_dim(c_, m_, "RADEMACHER_SCALED");
    psd_ = is_psd(m_ + c_) && is_psd(m_ - c_);
  }
  GeneratorKind kind() const override { return GeneratorKind::RademacherScaled; }
  Eigen::Index dim() const override { return c_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override { return m_ + rademacher(rng) * c_; }
  std::optional<WeightedSupport> support() const override {
    return WeightedSupport{{0.5, m_ + c_}, {0.5, m_ - c_}};
  }
  std::optional<SymMat> central_abs_moment(double p) const override {
    return mat_pow(mat_abs(c_), p);
  }
  std::optional<double> spectral_central_moment(double p) const override {
    return std::pow(spectral_norm(c_), p);
  }
  std::optional<double> vector_central_moment(double p) const override {
    return std::pow(c_.matrix().diagonal().norm(), p);
  }
  bool psd_valued() const override { return psd_; }
  std::optional<SymMat> upper_bound() const override {
    if (!psd_) return std::nullopt;
    return m_ + mat_abs(c_);
  }
  std::optional<SymMat> deviation_square_bound() const override { return mat_square(c_); }
  std::optional<double> deviation_lambda_max_bound() const override { return spectral_norm(c_); }
  bool symmetric_deviation() const override { return true; }

 private:
  SymMat c_, m_;
  bool psd_ = false;
};

class GaussianScaled final : public Generator {
 public:
  GaussianScaled(SymMat c, SymMat m) : c_(std::move(c)), m_(std::move(m)) {
    require_same_dim(c_, m_, "GAUSSIAN_SCALED");
  }
  GeneratorKind kind() const override { return GeneratorKind::GaussianScaled; }
  Eigen::Index dim() const override { return c_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override { return m_ + std_normal(rng) * c_; }
  std::optional<SymMat> expect(const std::function<SymMat(const SymMat&)>& f) const override {
    const auto& [x, w] = hermite_rule();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim(), dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) acc += w(i) * f(m_ + x(i) * c_).matrix();
    return SymMat(acc);
  }
  std::optional<SymMat> central_abs_moment(double p) const override {
    return gaussian_abs_moment(p) * mat_pow(mat_abs(c_), p);
  }
  std::optional<double> spectral_central_moment(double p) const override {
    return gaussian_abs_moment(p) * std::pow(spectral_norm(c_), p);
  }
  std::optional<double> vector_central_moment(double p) const override {
    return gaussian_abs_moment(p) * std::pow(c_.matrix().diagonal().norm(), p);
  }
  bool symmetric_deviation() const override { return true; }

 private:
  SymMat c_, m_;
};

class BoundedPsd final : public Generator {
 public:
  BoundedPsd(SymMat b, SymMat m) : b_(std::move(b)), m_(std::move(m)) {
    require_same_dim(b_, m_, "BOUNDED_PSD");
    if (!is_positive_definite(b_)) throw DomainError("BOUNDED_PSD: B must be positive definite");
    if (!is_psd(m_) || !loewner_leq(m_, b_)) {
      throw DomainError("BOUNDED_PSD: mean must satisfy 0 ⪯ M ⪯ B");
    }
    if (b_.dim() > kMaxEnumerationDim) throw DomainError("BOUNDED_PSD: dimension too large");
    root_ = mat_sqrt(b_);
    const SymMat inv_root = mat_pow(b_, -0.5);
    const SpectralDecomp dec = decompose(congruence(inv_root.matrix(), m_));
    q_ = dec.eigenvectors;
    kappa_ = dec.eigenvalues.cwiseMax(0.0).cwiseMin(1.0);
    basis_ = root_.matrix() * q_;
  }
  GeneratorKind kind() const override { return GeneratorKind::BoundedPsd; }
  Eigen::Index dim() const override { return b_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    Eigen::VectorXd bits(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) bits(i) = open_uniform(rng) < kappa_(i) ? 1.0 : 0.0;
    return at(bits);
  }
  std::optional<WeightedSupport> support() const override {
    WeightedSupport out;
    for_each_pattern(dim(), [&](const Eigen::VectorXi& bits) {
      double w = 1.0;
      for (Eigen::Index i = 0; i < dim(); ++i) w *= bits(i) ? kappa_(i) : 1.0 - kappa_(i);
      if (w > 0.0) out.emplace_back(w, at(bits.cast<double>()));
    });
    return out;
  }
  bool psd_valued() const override { return true; }
  std::optional<SymMat> upper_bound() const override { return b_; }
  std::optional<double> deviation_lambda_max_bound() const override { return lambda_max(b_); }

 private:
  SymMat at(const Eigen::VectorXd& bits) const {
    return symmetrize_product(basis_ * bits.asDiagonal() * basis_.transpose());
  }
  SymMat b_, m_;
  SymMat root_ = SymMat::identity(1);
  Eigen::MatrixXd q_, basis_;
  Eigen::VectorXd kappa_;
};

class SymmetricHeavy final : public Generator {
 public:
  SymmetricHeavy(SymMat s, SymMat m, double tail, double iso)
      : s_(std::move(s)), m_(std::move(m)), tail_(tail), iso_(iso) {
    require_same_dim(s_, m_, "SYMMETRIC_HEAVY");
    if (!(tail > 1.0) || !std::isfinite(tail)) {
      throw DomainError("SYMMETRIC_HEAVY: tail index must exceed 1");
    }
    if (!std::isfinite(iso)) throw DomainError("SYMMETRIC_HEAVY: non-finite isotropic scale");
    sigma_ = eigenvalues(s_);
  }
  GeneratorKind kind() const override { return GeneratorKind::SymmetricHeavy; }
  Eigen::Index dim() const override { return s_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    const double mag = std::pow(open_uniform(rng), -1.0 / tail_) - 1.0;
    const double s = rademacher(rng) * mag;
    SymMat x = m_ + s * s_;
    if (iso_ != 0.0) x = x + SymMat::scaled_identity(dim(), iso_ * rademacher(rng));
    return x;
  }
  std::optional<SymMat> central_abs_moment(double p) const override {
    if (p >= tail_) return std::nullopt;
    if (iso_ == 0.0) return lomax_moment(p, tail_) * mat_pow(mat_abs(s_), p);
    const SpectralDecomp dec = decompose(s_);
    Eigen::VectorXd f(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const double sg = dec.eigenvalues(i);
      f(i) = both_signs([&](double m, double r) { return std::pow(std::abs(m * sg + iso_ * r), p); });
    }
    return detail::assemble(dec.eigenvectors, f);
  }
  std::optional<double> spectral_central_moment(double p) const override {
    if (p >= tail_) return std::nullopt;
    if (iso_ == 0.0) return lomax_moment(p, tail_) * std::pow(spectral_norm(s_), p);
    return both_signs([&](double m, double r) {
      return std::pow((m * sigma_.array() + iso_ * r).abs().maxCoeff(), p);
    });
  }
  std::optional<double> vector_central_moment(double p) const override {
    if (p >= tail_) return std::nullopt;
    const Eigen::VectorXd diag = s_.matrix().diagonal();
    if (iso_ == 0.0) return lomax_moment(p, tail_) * std::pow(diag.norm(), p);
    return both_signs([&](double m, double r) {
      return std::pow((m * diag.array() + iso_ * r).matrix().norm(), p);
    });
  }
  bool symmetric_deviation() const override { return true; }

 private:
  // E h over (sign of s, r); flipping both leaves |.| invariant.
  double both_signs(const std::function<double(double, double)>& h) const {
    const double plus = lomax_expect([&](double m) { return h(m, 1.0); }, tail_);
    const double minus = lomax_expect([&](double m) { return h(m, -1.0); }, tail_);
    return 0.5 * (plus + minus);
  }
  SymMat s_, m_;
  double tail_, iso_;
  Eigen::VectorXd sigma_;
};

class HeavyPsd final : public Generator {
 public:
  HeavyPsd(SymMat p, double tail) : p_(std::move(p)), tail_(tail) {
    if (!is_psd(p_)) throw DomainError("HEAVY_PSD: shape must be PSD");
    if (!(tail > 1.0) || !std::isfinite(tail)) {
      throw DomainError("HEAVY_PSD: tail index must exceed 1");
    }
  }
  GeneratorKind kind() const override { return GeneratorKind::HeavyPsd; }
  Eigen::Index dim() const override { return p_.dim(); }
  SymMat mean() const override { return lomax_moment(1.0, tail_) * p_; }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    return (std::pow(open_uniform(rng), -1.0 / tail_) - 1.0) * p_;
  }
  std::optional<SymMat> raw_moment(double q) const override {
    if (q >= tail_) return std::nullopt;
    return lomax_moment(q, tail_) * mat_pow(p_, q);
  }
  bool psd_valued() const override { return true; }

 private:
  SymMat p_;
  double tail_;
};

class ExchangeableMixture final : public Generator {
 public:
  ExchangeableMixture(SymMat m, SymMat d, SymMat c)
      : m_(std::move(m)), d_(std::move(d)), c_(std::move(c)) {
    require_same_dim(m_, d_, "EXCHANGEABLE_MIXTURE");
    require_same_dim(m_, c_, "EXCHANGEABLE_MIXTURE");
  }
  GeneratorKind kind() const override { return GeneratorKind::ExchangeableMixture; }
  Eigen::Index dim() const override { return m_.dim(); }
  SymMat mean() const override { return m_; }
  PathLatent begin_path(Rng& rng) const override { return {rademacher(rng)}; }
  SymMat draw(Rng& rng, const PathLatent& latent) const override {
    return m_ + latent.xi * d_ + std_normal(rng) * c_;
  }
  std::optional<SymMat> expect(const std::function<SymMat(const SymMat&)>& f) const override {
    const auto& [x, w] = hermite_rule();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim(), dim());
    for (double xi : {-1.0, 1.0}) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        acc += 0.5 * w(i) * f(m_ + xi * d_ + x(i) * c_).matrix();
      }
    }
    return SymMat(acc);
  }
  std::optional<SymMat> variance() const override { return mat_square(d_) + mat_square(c_); }
  std::optional<SymMat> central_abs_moment(double p) const override {
    if (p == 2.0) return variance();
    return std::nullopt;
  }
  std::optional<double> spectral_central_moment(double) const override { return std::nullopt; }
  std::optional<double> vector_central_moment(double) const override { return std::nullopt; }
  bool symmetric_deviation() const override { return true; }
  bool iid() const override { return false; }

 private:
  SymMat m_, d_, c_;
};

class IidWishartLike final : public Generator {
 public:
  explicit IidWishartLike(SymMat m) : m_(std::move(m)) {
    if (!is_psd(m_)) throw DomainError("IID_WISHART_LIKE: mean must be PSD");
    root_ = mat_sqrt(m_).matrix();
  }
  GeneratorKind kind() const override { return GeneratorKind::IidWishartLike; }
  Eigen::Index dim() const override { return m_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    Eigen::VectorXd g(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) g(i) = std_normal(rng);
    return SymMat::outer(root_ * g);
  }
  std::optional<SymMat> variance() const override { return mat_square(m_) + trace(m_) * m_; }
  std::optional<SymMat> central_abs_moment(double p) const override {
    if (p == 2.0) return variance();
    return std::nullopt;
  }
  std::optional<SymMat> raw_moment(double p) const override {
    if (p == 1.0) return m_;
    if (p == 2.0) return 2.0 * mat_square(m_) + trace(m_) * m_;
    return std::nullopt;
  }
  std::optional<double> spectral_central_moment(double) const override { return std::nullopt; }
  std::optional<double> vector_central_moment(double) const override { return std::nullopt; }
  bool psd_valued() const override { return true; }

 private:
  SymMat m_;
  Eigen::MatrixXd root_;
};

class EllipsoidRank1 final : public Generator {
 public:
  EllipsoidRank1(SymMat a, double k) : a_(std::move(a)), k_(k) {
    if (!is_positive_definite(a_)) throw DomainError("ELLIPSOID_RANK1: shape must be PD");
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("ELLIPSOID_RANK1: radius power must be positive");
    root_ = mat_sqrt(a_).matrix();
  }
  GeneratorKind kind() const override { return GeneratorKind::EllipsoidRank1; }
  Eigen::Index dim() const override { return a_.dim(); }
  SymMat mean() const override {
    return a_ / (static_cast<double>(dim()) * (2.0 * k_ + 1.0));
  }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    Eigen::VectorXd w(dim());
    double nrm = 0.0;
    do {
      for (Eigen::Index i = 0; i < dim(); ++i) w(i) = std_normal(rng);
      nrm = w.norm();
    } while (nrm == 0.0);
    const double r = std::pow(open_uniform(rng), k_);
    return SymMat::outer(root_ * (r / nrm) * w);
  }
  std::optional<SymMat> raw_moment(double p) const override {
    if (p == 1.0) return mean();
    return std::nullopt;
  }
  std::optional<SymMat> central_abs_moment(double) const override { return std::nullopt; }
  std::optional<double> spectral_central_moment(double) const override { return std::nullopt; }
  std::optional<double> vector_central_moment(double) const override { return std::nullopt; }
  bool psd_valued() const override { return true; }
  std::optional<SymMat> upper_bound() const override { return a_; }

 private:
  SymMat a_;
  double k_;
  Eigen::MatrixXd root_;
};

class RandomSignSpectral final : public Generator {
 public:
  RandomSignSpectral(SymMat c, SymMat m) : c_(std::move(c)), m_(std::move(m)) {
    require_same_dim(c_, m_, "RANDOM_SIGN_SPECTRAL");
    if (c_.dim() > kMaxEnumerationDim) throw DomainError("RANDOM_SIGN_SPECTRAL: dimension too large");
    const SpectralDecomp dec = decompose(c_);
    q_ = dec.eigenvectors;
    c_eig_ = dec.eigenvalues;
  }
  GeneratorKind kind() const override { return GeneratorKind::RandomSignSpectral; }
  Eigen::Index dim() const override { return c_.dim(); }
  SymMat mean() const override { return m_; }
  SymMat draw(Rng& rng, const PathLatent&) const override {
    Eigen::VectorXd signs(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) signs(i) = rademacher(rng);
    return at(signs);
  }
  std::optional<WeightedSupport> support() const override {
    WeightedSupport out;
    const double w = std::ldexp(1.0, -static_cast<int>(dim()));
    for_each_pattern(dim(), [&](const Eigen::VectorXi& bits) {
      out.emplace_back(w, at(2.0 * bits.cast<double>().array() - 1.0));
    });
    return out;
  }
  std::optional<SymMat> central_abs_moment(double p) const override {
    return mat_pow(mat_abs(c_), p);
  }
  std::optional<double> spectral_central_moment(double p) const override {
    return std::pow(spectral_norm(c_), p);
  }
  bool psd_valued() const override { return lambda_min(m_) >= c_eig_.cwiseAbs().maxCoeff(); }
  std::optional<SymMat> deviation_square_bound() const override { return mat_square(c_); }
  std::optional<double> deviation_lambda_max_bound() const override {
    return c_eig_.cwiseAbs().maxCoeff();
  }
  bool symmetric_deviation() const override { return true; }

 private:
  SymMat at(const Eigen::VectorXd& signs) const {
    const Eigen::VectorXd s = signs.cwiseProduct(c_eig_);
    return m_ + detail::assemble(q_, s);
  }
  SymMat c_, m_;
  Eigen::MatrixXd q_;
  Eigen::VectorXd c_eig_;
};

}  // namespace

GeneratorPtr make_rademacher_scaled(const SymMat& c, const SymMat& m) {
  return std::make_shared<RademacherScaled>(c, m);
}
GeneratorPtr make_gaussian_scaled(const SymMat& c, const SymMat& m) {
  return std::make_shared<GaussianScaled>(c, m);
}
GeneratorPtr make_bounded_psd(const SymMat& b, const SymMat& m) {
  return std::make_shared<BoundedPsd>(b, m);
}
GeneratorPtr make_symmetric_heavy(const SymMat& s, const SymMat& m, double tail, double iso) {
  return std::make_shared<SymmetricHeavy>(s, m, tail, iso);
}
GeneratorPtr make_heavy_psd(const SymMat& p, double tail) {
  return std::make_shared<HeavyPsd>(p, tail);
}
GeneratorPtr make_exchangeable_mixture(const SymMat& m, const SymMat& d, const SymMat& c) {
  return std::make_shared<ExchangeableMixture>(m, d, c);
}
GeneratorPtr make_iid_wishart_like(const SymMat& m) {
  return std::make_shared<IidWishartLike>(m);
}
GeneratorPtr make_ellipsoid_rank1(const SymMat& a, double radius_power) {
  return std::make_shared<EllipsoidRank1>(a, radius_power);
}
GeneratorPtr make_random_sign_spectral(const SymMat& c, const SymMat& m) {
  return std::make_shared<RandomSignSpectral>(c, m);
}

}  // namespace matconc
