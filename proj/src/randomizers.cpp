#include "matconc/randomizers.hpp"

#include <fmt/format.h>

namespace matconc {

ScalarRandomizer::ScalarRandomizer(Kind kind, std::uint64_t seed)
    : kind_(kind), seed_(seed), rng_(substream_seed(seed, 0, stream::kRandomizer)) {}

ScalarRandomizer ScalarRandomizer::uniform01(std::uint64_t seed) {
  return ScalarRandomizer(Kind::Uniform01, seed);
}

ScalarRandomizer ScalarRandomizer::constant_one() { return ScalarRandomizer(Kind::ConstantOne, 0); }

ScalarRandomizer ScalarRandomizer::custom(std::function<double(Rng&)> sampler, std::uint64_t seed) {
  ScalarRandomizer r(Kind::Custom, seed);
  r.custom_ = std::move(sampler);
  return r;
}

double ScalarRandomizer::sample() {
  switch (kind_) {
    case Kind::Uniform01:
      return open_uniform(rng_);
    case Kind::ConstantOne:
      return 1.0;
    case Kind::Custom: {
      const double u = custom_(rng_);
      if (!(u > 0.0)) throw DomainError("custom randomizer returned a non-positive draw");
      return u;
    }
  }
  return 1.0;
}

ScalarRandomizer ScalarRandomizer::for_trial(std::uint64_t trial) const {
  ScalarRandomizer r = *this;
  r.rng_.seed(substream_seed(seed_, trial, stream::kRandomizer));
  return r;
}

MatrixRandomizer::MatrixRandomizer(Kind kind, Eigen::Index dim, std::uint64_t seed,
                                   std::optional<SymMat> y)
    : kind_(kind),
      dim_(dim),
      seed_(seed),
      y_(std::move(y)),
      rng_(substream_seed(seed, 0, stream::kRandomizer)) {
  if (dim_ < 1) throw DimMismatch("randomizer dimension must be at least 1");
}

MatrixRandomizer MatrixRandomizer::identity(Eigen::Index dim) {
  return MatrixRandomizer(Kind::Identity, dim, 0, std::nullopt);
}

MatrixRandomizer MatrixRandomizer::scaled_identity(Eigen::Index dim, std::uint64_t seed) {
  return MatrixRandomizer(Kind::ScaledIdentity, dim, seed, std::nullopt);
}

MatrixRandomizer MatrixRandomizer::shifted(const SymMat& y, std::uint64_t seed) {
  if (!is_psd(y)) throw DomainError("randomizer shift must be positive semidefinite");
  return MatrixRandomizer(Kind::Shifted, y.dim(), seed, y);
}

SymMat MatrixRandomizer::at(double u) const {
  switch (kind_) {
    case Kind::Identity:
      return SymMat::identity(dim_);
    case Kind::ScaledIdentity:
      return SymMat::scaled_identity(dim_, u);
    case Kind::Shifted:
      return SymMat::scaled_identity(dim_, u) + *y_;
  }
  return SymMat::identity(dim_);
}

SymMat MatrixRandomizer::sample() {
  if (kind_ == Kind::Identity) return SymMat::identity(dim_);
  return at(open_uniform(rng_));
}

MatrixRandomizer MatrixRandomizer::for_trial(std::uint64_t trial) const {
  MatrixRandomizer r = *this;
  r.rng_.seed(substream_seed(seed_, trial, stream::kRandomizer));
  return r;
}

std::string to_string(MatrixRandomizer::Kind k) {
  switch (k) {
    case MatrixRandomizer::Kind::Identity:
      return "identity";
    case MatrixRandomizer::Kind::ScaledIdentity:
      return "scaled_identity";
    case MatrixRandomizer::Kind::Shifted:
      return "shifted";
  }
  return "identity";
}

MatrixRandomizer::Kind parse_matrix_randomizer_kind(const std::string& s) {
  if (s == "identity") return MatrixRandomizer::Kind::Identity;
  if (s == "scaled_identity" || s == "uniform") return MatrixRandomizer::Kind::ScaledIdentity;
  if (s == "shifted") return MatrixRandomizer::Kind::Shifted;
  throw ConfigError(fmt::format("unknown randomizer kind '{}'", s));
}

SuperuniformCheck verify_trace_superuniform(const MatrixRandomizer& r, std::int64_t trials,
                                            const std::vector<SymMat>& y_samples,
                                            const ToleranceConfig& tol) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  SuperuniformCheck out;
  for (std::size_t k = 0; k < y_samples.size(); ++k) {
    const SymMat& y = y_samples[k];
    require_same_dim(y, SymMat::zero(r.dim()), "verify_trace_superuniform");
    if (!is_psd(y, tol)) throw DomainError("test matrix y must be positive semidefinite");
    MatrixRandomizer local = r.for_trial(k);
    std::int64_t events = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
      // U ⋡ y
      if (!loewner_leq(y, local.sample(), tol)) ++events;
    }
    McReport rep = make_report(fmt::format("y[{}]", k), trials, events, trace(y));
    out.pass = out.pass && rep.wilson.lo <= trace(y);
    out.per_y.push_back(std::move(rep));
  }
  return out;
}

}  // namespace matconc
