#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "matconc/report.hpp"
#include "matconc/rng.hpp"
#include "matconc/symmat.hpp"

namespace matconc {

/// Super-uniform scalar: Pr(U <= x) <= x. Owns its RNG stream.
class ScalarRandomizer {
 public:
  enum class Kind { Uniform01, ConstantOne, Custom };

  static ScalarRandomizer uniform01(std::uint64_t seed);
  static ScalarRandomizer constant_one();
  /// The sampler must return values > 0 that are super-uniform; not checked.
  static ScalarRandomizer custom(std::function<double(Rng&)> sampler, std::uint64_t seed);

  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  double sample();
  /// Independent copy for one Monte Carlo trial.
  ScalarRandomizer for_trial(std::uint64_t trial) const;

 private:
  ScalarRandomizer(Kind kind, std::uint64_t seed);

  Kind kind_;
  std::uint64_t seed_;
  Rng rng_;
  std::function<double(Rng&)> custom_;
};

/// Trace super-uniform random matrix: identity, U I, or U I + Y with Y PSD.
class MatrixRandomizer {
 public:
  enum class Kind { Identity, ScaledIdentity, Shifted };

  static MatrixRandomizer identity(Eigen::Index dim);
  static MatrixRandomizer scaled_identity(Eigen::Index dim, std::uint64_t seed);
  static MatrixRandomizer shifted(const SymMat& y, std::uint64_t seed);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  const std::optional<SymMat>& shift() const { return y_; }

  /// Every draw satisfies U ⪯ I, so randomized thresholds never exceed the U = I ones.
  bool dominated_by_identity() const { return kind_ != Kind::Shifted; }

  SymMat sample();
  /// The draw that a scalar uniform u would produce.
  SymMat at(double u) const;
  MatrixRandomizer for_trial(std::uint64_t trial) const;

 private:
  MatrixRandomizer(Kind kind, Eigen::Index dim, std::uint64_t seed, std::optional<SymMat> y);

  Kind kind_;
  Eigen::Index dim_;
  std::uint64_t seed_;
  std::optional<SymMat> y_;
  Rng rng_;
};

std::string to_string(MatrixRandomizer::Kind k);
MatrixRandomizer::Kind parse_matrix_randomizer_kind(const std::string& s);

struct SuperuniformCheck {
  std::vector<McReport> per_y;  // stated_bound = tr(y)
  bool pass = true;             // every Wilson lower bound <= tr(y)
};

/// Empirical Pr(U ⋡ y) for each PSD y.
SuperuniformCheck verify_trace_superuniform(const MatrixRandomizer& r, std::int64_t trials,
                                            const std::vector<SymMat>& y_samples,
                                            const ToleranceConfig& tol = {});

}  // namespace matconc
