#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matconc/symmat.hpp"

namespace matconc {

/// Search for i.i.d. laws with large ratio E abs(X_1 + ... + X_n)^p against n V_p, V_p = E abs(X)^p.
/// X is uniform on {±C_1, ..., ±C_m}; expectations are exact over all (2m)^n outcomes.
/// Exploratory only.
struct FalsifyConfig {
  double p = 1.5;
  Eigen::Index d = 2;
  long budget = 2000;        // random instances
  long refine_steps = 2000;  // local perturbations of the incumbent
  int n_min = 2;   // sample size range
  int n_max = 4;
  int m_max = 3;   // support size of the law
  std::uint64_t seed = 20240501;
  // Ratio a counterexample must exceed; defaults to the scalar constant 2^{2-p}.
  std::optional<double> candidate_f;

  void validate() const;  // ConfigError
};

struct FalsifyInstance {
  std::vector<SymMat> c;
  long n = 0;
  double trace_ratio = 0.0;    // tr E abs(ΣX)^p / (n tr V_p)
  double loewner_ratio = 0.0;  // smallest f with E abs(ΣX)^p ⪯ f n V_p
};

struct FalsifyResult {
  double p = 0.0;
  Eigen::Index d = 0;
  double candidate_f = 0.0;
  long evaluated = 0;
  FalsifyInstance best;
  bool exceeds_candidate = false;  // best.loewner_ratio > candidate_f
};

/// Exact ratios for X uniform on {±C_k} and n i.i.d. copies.
FalsifyInstance evaluate_instance(const std::vector<SymMat>& c, long n, double p);

FalsifyResult falsify_conjecture(const FalsifyConfig& cfg);

std::string to_json(const FalsifyResult& r, int indent = 2);

}  // namespace matconc
