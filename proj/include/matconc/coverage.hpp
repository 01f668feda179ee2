#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matconc/fixed_bounds.hpp"
#include "matconc/generators.hpp"
#include "matconc/martingales.hpp"
#include "matconc/randomizers.hpp"
#include "matconc/report.hpp"

namespace matconc {

enum class BoundId {
  Ummi,
  Umci1,
  UmciN,
  Pcheb1,
  Chernoff1,
  ChernoffHoeffding,
  VecPcheb,
  SpectralPcheb,
  Umvi,
  Mvi,
  EprocessMin,
  Doob,
  Xmci,
  Xmci2,
  Xmpci,
  TracePcheb,
  Ursn,
  Usmhi,
};

std::string to_string(BoundId b);
BoundId parse_bound_id(const std::string& s);
const std::vector<BoundId>& all_bounds();
/// Bounds whose event is evaluated along a path of length N_max.
bool is_sequential(BoundId b);
/// Bounds that take a randomizer U (the U = I event is then checked for dominance).
bool is_randomizable(BoundId b);

enum class StoppingKind { Fixed, FirstCrossing, Geometric };
std::string to_string(StoppingKind k);
StoppingKind parse_stopping_kind(const std::string& s);

struct StoppingRule {
  StoppingKind kind = StoppingKind::FirstCrossing;
  double geometric_p = 0.05;  // per-step stopping probability
};

struct McConfig {
  std::int64_t trials = 10000;
  long n_max = 100;
  StoppingRule stopping;
  int workers = 1;
  std::uint64_t seed = 20240501;
  bool check_dominance = false;
  bool record_outcomes = false;

  void validate() const;  // ConfigError
};

struct CoverageCase {
  BoundId bound = BoundId::Ummi;
  GeneratorPtr generator;
  std::string label;  // generated when empty

  // Stated bound the threshold is calibrated to; alpha for URSN and USMHI.
  double target = 0.1;
  // Threshold A = c S with c chosen so the bound equals target. S defaults to I.
  std::optional<SymMat> shape;
  // Explicit threshold; skips calibration.
  std::optional<SymMat> threshold;

  long n = 1;      // sample size for mean bounds; first index for XMCI2
  double p = 1.5;  // p-type bounds
  std::optional<double> gamma;
  MgfKind mgf_row = MgfKind::Rademacher;
  BuilderKind builder = BuilderKind::Symmetric;

  MatrixRandomizer::Kind randomizer = MatrixRandomizer::Kind::ScaledIdentity;
  std::optional<SymMat> randomizer_shift;
  // Seed of the randomizer stream; defaults to the run seed.
  std::optional<std::uint64_t> randomizer_seed;

  // Mean assumed by the bound. A value different from the generator mean is an alternative run.
  std::optional<SymMat> hypothesized_mean;
};

struct TrialOutcome {
  std::int64_t trial = 0;
  bool event = false;
  bool event_unrandomized = false;
  long stop = 0;
};

struct CoverageResult {
  McReport report;
  std::vector<TrialOutcome> outcomes;
  // Calibrated threshold and the γ used, for inspection.
  std::optional<SymMat> threshold;
  double threshold_scalar = 0.0;
  double gamma = 0.0;
};

/// Throws IncompatiblePair when the generator does not satisfy the bound's assumptions.
void check_compatibility(const CoverageCase& c, const McConfig& mc);

/// MGF row parameters implied by the generator law (IncompatiblePair when the row does not apply).
MgfParams mgf_params_for(const Generator& g, MgfKind row);
/// Builder parameters implied by the generator law.
BuilderParams builder_params_for(const Generator& g, BuilderKind kind, const SymMat& mean);
/// γ used by a builder when the case does not set one.
double default_builder_gamma(const Generator& g, BuilderKind kind, const SymMat& mean);

CoverageResult run_coverage(const CoverageCase& c, const McConfig& mc);

/// Per-trial outcomes as CSV (trial,event,event_unrandomized,stop).
std::string outcomes_csv(const std::vector<TrialOutcome>& outcomes);

}  // namespace matconc
