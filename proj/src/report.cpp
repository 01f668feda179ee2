#include "matconc/report.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

namespace matconc {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::NotApplicable:
      return "N/A";
  }
  return "N/A";
}

WilsonInterval wilson_interval(std::int64_t events, std::int64_t trials, double z) {
  if (trials <= 0) return {};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(events) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

McReport make_report(std::string label, std::int64_t trials, std::int64_t events,
                     double stated_bound, bool alternative, bool estimate) {
  McReport r;
  r.label = std::move(label);
  r.trials = trials;
  r.events = events;
  r.stated_bound = stated_bound;
  r.vacuous = stated_bound > 1.0;
  r.estimate = estimate;
  r.alternative = alternative;
  if (trials > 0) {
    const double n = static_cast<double>(trials);
    r.event_freq = static_cast<double>(events) / n;
    r.std_error = std::sqrt(r.event_freq * (1.0 - r.event_freq) / n);
  }
  r.wilson = wilson_interval(events, trials);
  if (alternative) {
    r.verdict = Verdict::NotApplicable;
  } else {
    r.verdict = r.event_freq - 3.0 * r.std_error <= stated_bound ? Verdict::Pass : Verdict::Fail;
  }
  return r;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "1e999" : "-1e999";
  return fmt::format("{:.17g}", x);
}

std::string to_json(const McReport& r, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string in = pad + "  ";
  std::string s = "{\n";
  auto field = [&](const char* key, const std::string& value, bool last = false) {
    s += fmt::format("{}\"{}\": {}{}\n", in, key, value, last ? "" : ",");
  };
  field("label", nlohmann::json(r.label).dump());
  field("trials", std::to_string(r.trials));
  field("events", std::to_string(r.events));
  field("event_freq", format_double(r.event_freq));
  field("stderr", format_double(r.std_error));
  field("stated_bound", format_double(r.stated_bound));
  field("vacuous", r.vacuous ? "true" : "false");
  field("estimate", r.estimate ? "true" : "false");
  field("alternative", r.alternative ? "true" : "false");
  field("wilson_lo", format_double(r.wilson.lo));
  field("wilson_hi", format_double(r.wilson.hi));
  field("dominance_checked", std::to_string(r.dominance_checked));
  field("dominance_violations", std::to_string(r.dominance_violations));
  field("verdict", fmt::format("\"{}\"", to_string(r.verdict)), true);
  s += pad + "}";
  return s;
}

}  // namespace matconc
