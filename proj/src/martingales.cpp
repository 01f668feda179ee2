#include "matconc/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace matconc {

GammaSchedule GammaSchedule::constant(double gamma) {
  if (!std::isfinite(gamma)) throw ConfigError("gamma must be finite");
  GammaSchedule g;
  g.kind_ = Kind::Constant;
  g.c_ = gamma;
  return g;
}

GammaSchedule GammaSchedule::list(std::vector<double> gammas) {
  if (gammas.empty()) throw ConfigError("gamma list is empty");
  for (double x : gammas) {
    if (!std::isfinite(x)) throw ConfigError("gamma must be finite");
  }
  GammaSchedule g;
  g.kind_ = Kind::List;
  g.list_ = std::move(gammas);
  return g;
}

GammaSchedule GammaSchedule::inv_sqrt(double c) {
  if (!std::isfinite(c)) throw ConfigError("gamma scale must be finite");
  GammaSchedule g;
  g.kind_ = Kind::InvSqrt;
  g.c_ = c;
  return g;
}

GammaSchedule GammaSchedule::custom(std::function<double(long)> f) {
  GammaSchedule g;
  g.kind_ = Kind::Custom;
  g.f_ = std::move(f);
  return g;
}

double GammaSchedule::at(long n) const {
  if (n < 1) throw DomainError("gamma schedule is indexed from 1");
  switch (kind_) {
    case Kind::Constant:
      return c_;
    case Kind::List:
      return list_[static_cast<std::size_t>(std::min<long>(n, static_cast<long>(list_.size())) - 1)];
    case Kind::InvSqrt:
      return c_ / std::sqrt(static_cast<double>(n));
    case Kind::Custom:
      return f_(n);
  }
  return c_;
}

std::string to_string(BuilderKind k) {
  switch (k) {
    case BuilderKind::Mgf:
      return "mgf";
    case BuilderKind::Betting:
      return "betting";
    case BuilderKind::SelfNormalized:
      return "self_normalized";
    case BuilderKind::Symmetric:
      return "symmetric";
  }
  return "mgf";
}

BuilderKind parse_builder_kind(const std::string& s) {
  if (s == "mgf") return BuilderKind::Mgf;
  if (s == "betting") return BuilderKind::Betting;
  if (s == "self_normalized" || s == "sn") return BuilderKind::SelfNormalized;
  if (s == "symmetric" || s == "symmetric_dist") return BuilderKind::Symmetric;
  throw ConfigError(fmt::format("unknown builder '{}'", s));
}

namespace {

// f(D) and sqrt(f(D)) from one decomposition; f must be positive on the spectrum of D.
std::pair<SymMat, SymMat> spectral_with_sqrt(const SymMat& d, const std::function<double(double)>& f) {
  const SpectralDecomp dec = decompose(d);
  Eigen::VectorXd fl(dec.eigenvalues.size());
  Eigen::VectorXd sl(dec.eigenvalues.size());
  for (Eigen::Index i = 0; i < fl.size(); ++i) {
    fl(i) = f(dec.eigenvalues(i));
    sl(i) = std::sqrt(fl(i));
  }
  return {detail::assemble(dec.eigenvectors, fl), detail::assemble(dec.eigenvectors, sl)};
}

Factors identity_a(Eigen::Index d, std::pair<SymMat, SymMat> e) {
  const SymMat id = SymMat::identity(d);
  return {std::move(e.first), id, std::move(e.second), id};
}

}  // namespace

Factors build_mgf(const SymMat& x, const SymMat& m, const MgfParams& row, double gamma) {
  require_same_dim(x, m, "build_mgf");
  if (row.dim() != x.dim()) throw DimMismatch("build_mgf: MGF parameters have the wrong dimension");
  if (!std::isfinite(gamma)) throw GammaOutOfRange("gamma must be finite");
  if ((row.kind == MgfKind::BennettI || row.kind == MgfKind::BennettII) && gamma < 0.0) {
    throw GammaOutOfRange("Bennett rows need gamma >= 0");
  }
  auto e = spectral_with_sqrt(x - m, [gamma](double l) { return std::exp(gamma * l); });
  const SymMat g = mgf_matrix(row, gamma);
  // G is an exponential, so its inverse and root come from the exponent directly.
  const SymMat log_g = mat_log(g);
  return {std::move(e.first), mat_exp(-log_g), std::move(e.second), mat_exp(-0.5 * log_g)};
}

std::pair<double, double> betting_gamma_range(const SymMat& m, const SymMat& b) {
  require_same_dim(m, b, "betting_gamma_range");
  const double inf = std::numeric_limits<double>::infinity();
  const double top_gap = lambda_max(b - m);
  const double top_m = lambda_max(m);
  const double lo = top_gap > 0.0 ? -1.0 / top_gap : -inf;
  const double hi = top_m > 0.0 ? 1.0 / top_m : inf;
  return {lo, hi};
}

Factors build_betting(const SymMat& x, const SymMat& m, const SymMat& b, double gamma,
                      const ToleranceConfig& tol) {
  require_same_dim(x, m, "build_betting");
  require_same_dim(x, b, "build_betting");
  const auto [lo, hi] = betting_gamma_range(m, b);
  if (!(gamma > lo && gamma < hi)) {
    throw GammaOutOfRange(
        fmt::format("betting fraction {:.17g} outside ({:.17g}, {:.17g})", gamma, lo, hi));
  }
  if (!is_psd(x, tol)) throw DomainError("build_betting: observation must be PSD");
  if (!loewner_leq(x, b, tol)) throw DomainError("build_betting: observation exceeds B");
  const SymMat id = SymMat::identity(x.dim());
  return {id + gamma * (x - m), id, std::nullopt, id};
}

Factors build_self_normalized(const SymMat& x, const SymMat& m, const SymMat& v, double gamma) {
  require_same_dim(x, m, "build_self_normalized");
  require_same_dim(x, v, "build_self_normalized");
  if (!std::isfinite(gamma)) throw GammaOutOfRange("gamma must be finite");
  const double g2 = gamma * gamma;
  auto e = spectral_with_sqrt(x - m, [gamma, g2](double l) {
    return std::exp(gamma * l - g2 * l * l / 6.0);
  });
  auto a = spectral_with_sqrt(v, [g2](double l) { return std::exp(-g2 * l / 3.0); });
  return {std::move(e.first), std::move(a.first), std::move(e.second), std::move(a.second)};
}

Factors build_symmetric(const SymMat& x, const SymMat& m, double gamma) {
  require_same_dim(x, m, "build_symmetric");
  if (!std::isfinite(gamma)) throw GammaOutOfRange("gamma must be finite");
  const double g2 = gamma * gamma;
  return identity_a(x.dim(), spectral_with_sqrt(x - m, [gamma, g2](double l) {
                      return std::exp(gamma * l - g2 * l * l / 2.0);
                    }));
}

void BuilderParams::validate() const {
  switch (kind) {
    case BuilderKind::Mgf:
      if (!mgf) throw ParamMismatch("MGF builder needs an MGF row");
      if (mgf->kind == MgfKind::SymmetricHoeffding) {
        throw ParamMismatch("symmetric Hoeffding gives no matrix MGF bound; use another row");
      }
      if (mgf->dim() != mean.dim()) throw DimMismatch("MGF parameters and mean differ in dimension");
      break;
    case BuilderKind::Betting:
      if (!upper) throw ParamMismatch("betting builder needs an upper bound B");
      require_same_dim(*upper, mean, "betting builder");
      if (!is_psd(mean)) throw ParamMismatch("betting mean must be PSD");
      if (!loewner_leq(mean, *upper)) throw ParamMismatch("betting mean must satisfy M ⪯ B");
      break;
    case BuilderKind::SelfNormalized:
      if (!variance) throw ParamMismatch("self-normalized builder needs a variance bound V");
      require_same_dim(*variance, mean, "self-normalized builder");
      if (!is_psd(*variance)) throw ParamMismatch("variance bound must be PSD");
      break;
    case BuilderKind::Symmetric:
      break;
  }
}

FactorStream::FactorStream(BuilderParams params, GammaSchedule schedule)
    : params_(std::move(params)), schedule_(std::move(schedule)) {
  params_.validate();
}

Factors FactorStream::next(const SymMat& x) {
  const double gamma = schedule_.at(n_ + 1);
  Factors f = [&]() {
    switch (params_.kind) {
      case BuilderKind::Mgf:
        return build_mgf(x, params_.mean, *params_.mgf, gamma);
      case BuilderKind::Betting:
        return build_betting(x, params_.mean, *params_.upper, gamma);
      case BuilderKind::SelfNormalized:
        return build_self_normalized(x, params_.mean, *params_.variance, gamma);
      case BuilderKind::Symmetric:
        return build_symmetric(x, params_.mean, gamma);
    }
    throw ConfigError("unknown builder");
  }();
  ++n_;
  return f;
}

MatSupermartingale::MatSupermartingale(Eigen::Index dim)
    : left_(Eigen::MatrixXd::Identity(dim, dim)) {
  if (dim < 1) throw DimMismatch("dimension must be at least 1");
}

void MatSupermartingale::step(const SymMat& e, const SymMat& a, const ToleranceConfig& tol) {
  if (e.dim() != dim() || a.dim() != dim()) throw DimMismatch("sm_step: factor dimension");
  if (!is_positive_definite(a)) throw DomainError("sm_step: A_n must be positive definite");
  // mat_sqrt rejects eigenvalues below -tol and clamps the rest.
  const SymMat se = mat_sqrt(e, tol);
  if (a.matrix().isIdentity(0.0)) {
    left_ = left_ * se.matrix();
  } else {
    left_ = left_ * mat_sqrt(a).matrix() * se.matrix();
  }
  ++n_;
}

void MatSupermartingale::step(const Factors& f, const ToleranceConfig& tol) {
  if (!f.sqrt_e || !f.sqrt_a) {
    step(f.e, f.a, tol);
    return;
  }
  if (f.sqrt_e->dim() != dim() || f.sqrt_a->dim() != dim()) {
    throw DimMismatch("sm_step: factor dimension");
  }
  if (f.sqrt_a->matrix().isIdentity(0.0)) {
    left_ = left_ * f.sqrt_e->matrix();
  } else {
    left_ = left_ * f.sqrt_a->matrix() * f.sqrt_e->matrix();
  }
  ++n_;
}

SymMat MatSupermartingale::value() const { return symmetrize_product(left_ * left_.transpose()); }

SymMat supermartingale_from_scratch(std::span<const Factors> factors) {
  if (factors.empty()) throw DomainError("no factors");
  const Eigen::Index d = factors[0].e.dim();
  Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd right = Eigen::MatrixXd::Identity(d, d);
  for (const Factors& f : factors) {
    const Eigen::MatrixXd sa = mat_sqrt(f.a).matrix();
    const Eigen::MatrixXd se = mat_sqrt(f.e).matrix();
    left = left * sa * se;
    right = se * sa * right;
  }
  return symmetrize_product(left * right);
}

bool ville_event(const SymMat& y, const SymMat& a, const SymMat& u, const ToleranceConfig& tol) {
  return ummi_event(y, a, u, tol);
}

double ville_bound(const SymMat& y0_mean, const SymMat& a) { return ummi_bound(y0_mean, a); }

SymMat eprocess_min(std::span<const SymMat> values, const ToleranceConfig& tol) {
  if (values.empty()) throw DomainError("eprocess_min: no processes");
  SymMat acc = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) acc = curlyvee(acc, values[i], tol);
  return acc;
}

SymMat eprocess_min(std::span<const MatSupermartingale> processes, const ToleranceConfig& tol) {
  std::vector<SymMat> values;
  values.reserve(processes.size());
  for (const auto& p : processes) values.push_back(p.value());
  return eprocess_min(std::span<const SymMat>(values), tol);
}

bool doob_event(std::span<const SymMat> history, const SymMat& a, const ToleranceConfig& tol) {
  require_positive_definite(a, "doob_event");
  return std::any_of(history.begin(), history.end(),
                     [&](const SymMat& y) { return !loewner_leq(y, a, tol); });
}

double doob_bound(const SymMat& ey_n, const SymMat& a) { return ummi_bound(ey_n, a); }

ExchangeableAvg::ExchangeableAvg(Eigen::Index dim) : sum_(Eigen::MatrixXd::Zero(dim, dim)) {}

void ExchangeableAvg::push(const SymMat& x) {
  if (x.dim() != sum_.rows()) throw DimMismatch("ExchangeableAvg: dimension");
  sum_ += x.matrix();
  ++n_;
}

SymMat ExchangeableAvg::mean() const {
  if (n_ == 0) throw DomainError("ExchangeableAvg: empty");
  return symmetrize_product(sum_ / static_cast<double>(n_));
}

bool xmci_event(std::span<const SymMat> xs, const SymMat& m, const SymMat& a, long n_max,
                long first_n, const ToleranceConfig& tol) {
  require_positive_definite(a, "xmci_event");
  ExchangeableAvg avg(m.dim());
  const long last = std::min<long>(n_max, static_cast<long>(xs.size()));
  for (long n = 1; n <= last; ++n) {
    avg.push(xs[static_cast<std::size_t>(n - 1)]);
    if (n < first_n) continue;
    if (!loewner_leq(mat_abs(avg.mean() - m), a, tol)) return true;
  }
  return false;
}

double xmci_bound(const SymMat& v, const SymMat& a) { return chebyshev1_bound(v, a); }

double xmci2_bound(const SymMat& v, const SymMat& a, long big_n) {
  if (big_n < 1) throw DomainError("xmci2: N must be at least 1");
  return chebyshev1_bound(v, a) / static_cast<double>(big_n);
}

bool xmpci_event(std::span<const SymMat> xs, const SymMat& a, double p, long n_max,
                 const ToleranceConfig& tol) {
  require_p_in_unit_range(p, "xmpci_event");
  require_positive_definite(a, "xmpci_event");
  ExchangeableAvg avg(a.dim());
  const long last = std::min<long>(n_max, static_cast<long>(xs.size()));
  for (long n = 1; n <= last; ++n) {
    avg.push(xs[static_cast<std::size_t>(n - 1)]);
    if (!loewner_leq(avg.mean(), a, tol)) return true;
  }
  return false;
}

double xmpci_bound(const SymMat& vp_raw, const SymMat& a, double p) {
  return pcheb1_bound(vp_raw, a, p);
}

double trace_abs_pow(const SymMat& d, double p) {
  const Eigen::VectorXd ev = eigenvalues(d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) s += std::pow(std::abs(ev(i)), p);
  return s;
}

bool trace_pcheb_event(std::span<const SymMat> xs, const SymMat& m, double a, double p,
                       long n_max) {
  if (!(p >= 1.0)) throw DomainError("trace_pcheb: p must be at least 1");
  if (!(a > 0.0)) throw DomainError("trace_pcheb: a must be positive");
  const double level = std::pow(a, p);
  ExchangeableAvg avg(m.dim());
  const long last = std::min<long>(n_max, static_cast<long>(xs.size()));
  for (long n = 1; n <= last; ++n) {
    avg.push(xs[static_cast<std::size_t>(n - 1)]);
    if (trace_abs_pow(avg.mean() - m, p) >= level) return true;
  }
  return false;
}

double trace_pcheb_bound(double tr_vp, double a, double p) {
  if (!(p >= 1.0)) throw DomainError("trace_pcheb: p must be at least 1");
  if (!(a > 0.0)) throw DomainError("trace_pcheb: a must be positive");
  if (!(tr_vp >= 0.0)) throw DomainError("trace_pcheb: tr Vp must be nonnegative");
  return tr_vp / std::pow(a, p);
}

SymMat exchangeable_conditional_mean(std::span<const SymMat> xs, const SymMat& c, double p,
                                     int perms, Rng& rng) {
  if (xs.size() < 2) throw DomainError("need at least two observations");
  if (perms < 1) throw DomainError("need at least one permutation");
  const std::size_t n = xs.size() - 1;
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(c.dim(), c.dim());
  for (int k = 0; k < perms; ++k) {
    std::shuffle(idx.begin(), idx.end(), rng);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(c.dim(), c.dim());
    for (std::size_t i = 0; i < n; ++i) s += xs[idx[i]].matrix();
    const SymMat dev = SymMat(s / static_cast<double>(n)) - c;
    acc += mat_pow(dev, p).matrix();
  }
  return SymMat(acc / static_cast<double>(perms));
}

}  // namespace matconc
