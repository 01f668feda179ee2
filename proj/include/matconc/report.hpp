#pragma once

#include <cstdint>
#include <string>

namespace matconc {

enum class Verdict { Pass, Fail, NotApplicable };

const char* to_string(Verdict v);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for `events` successes out of `trials`, z = 1.96 by default.
WilsonInterval wilson_interval(std::int64_t events, std::int64_t trials, double z = 1.959963984540054);

/// Outcome of one Monte Carlo coverage run.
struct McReport {
  std::string label;
  std::int64_t trials = 0;
  std::int64_t events = 0;
  double event_freq = 0.0;
  double std_error = 0.0;
  double stated_bound = 0.0;
  bool vacuous = false;    // stated bound above one
  bool estimate = false;   // bound uses a Monte Carlo estimate of a moment
  bool alternative = false;  // data violate the null; the verdict is N/A
  WilsonInterval wilson;
  Verdict verdict = Verdict::NotApplicable;
  // Pathwise randomization dominance: paths where the U = I event fired but the randomized one did not.
  std::int64_t dominance_checked = 0;
  std::int64_t dominance_violations = 0;
};

/// Fills frequency, standard error, Wilson interval and verdict.
/// PASS iff event_freq - 3 * std_error <= stated_bound.
McReport make_report(std::string label, std::int64_t trials, std::int64_t events,
                     double stated_bound, bool alternative = false, bool estimate = false);

/// One JSON object, floats with 17 significant digits, fixed key order.
std::string to_json(const McReport& r, int indent = 0);

/// Shortest exact round-trip text for a double (17 significant digits).
std::string format_double(double x);

}  // namespace matconc
