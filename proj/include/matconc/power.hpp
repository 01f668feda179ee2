#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matconc/generators.hpp"
#include "matconc/martingales.hpp"
#include "matconc/scalar_e.hpp"

namespace matconc {

/// MATRIX (Y_n^SN ⋠ A) against SCALAR (L_n^SN >= d u / α) on one data law.
struct PowerConfig {
  GeneratorPtr generator;
  SymMat null_mean = SymMat::zero(1);
  SymMat variance = SymMat::identity(1);  // V of the self-normalized process
  TestConfig test;                        // α and A with tr A⁻¹ = α
  GammaSchedule schedule = GammaSchedule::inv_sqrt(0.5);
  long n_max = 100;
  std::int64_t trials = 1000;
  std::uint64_t seed = 20240501;
  int workers = 1;
  bool randomized_scalar = false;  // u ~ Unif(0, 1) for SCALAR

  void validate() const;  // ConfigError
};

struct PowerPath {
  long reject_matrix = 0;  // first rejection time, 0 when never
  long reject_scalar = 0;
};

struct PowerResult {
  std::vector<double> power_matrix;  // fraction rejected by time n, index n - 1
  std::vector<double> power_scalar;
  std::vector<PowerPath> paths;
};

PowerResult power_compare(const PowerConfig& cfg);

/// CSV with header n,reject_matrix,reject_scalar.
std::string power_csv(const PowerResult& r);
/// CSV with header path,reject_matrix,reject_scalar (first rejection times).
std::string power_traces_csv(const PowerResult& r);

}  // namespace matconc
