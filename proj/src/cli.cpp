#include "matconc/cli.hpp"

#include <istream>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "matconc/falsify.hpp"
#include "matconc/io.hpp"

namespace matconc::cli {

namespace {

using io::Json;

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    io::write_atomic(path, content);
  }
}

std::string reports_json(const std::vector<McReport>& reports) {
  if (reports.size() == 1) return to_json(reports[0], 0) + "\n";
  std::string s = "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    s += "  " + to_json(reports[i], 2);
    s += i + 1 < reports.size() ? ",\n" : "\n";
  }
  return s + "]\n";
}

struct VerifyOptions {
  std::string config;
  std::string output;
  std::string csv;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> trials;
};

int run_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  const Json j = io::parse_json(io::read_file(o.config), o.config);
  if (!j.is_object()) throw ConfigError("verify config: expected an object");
  McConfig shared;
  shared.seed = io::default_seed();
  if (j.contains("mc")) shared = io::parse_mc(j.at("mc"), shared);

  std::vector<std::pair<CoverageCase, McConfig>> cases;
  auto add = [&](const Json& cj) {
    McConfig mc = cj.contains("mc") ? io::parse_mc(cj.at("mc"), shared) : shared;
    if (o.seed) mc.seed = *o.seed;
    if (o.workers) mc.workers = *o.workers;
    if (o.trials) mc.trials = *o.trials;
    mc.record_outcomes = !o.csv.empty();
    mc.validate();
    cases.emplace_back(io::parse_case(cj), mc);
  };
  if (j.contains("cases")) {
    if (!j.at("cases").is_array() || j.at("cases").empty()) {
      throw ConfigError("verify config: 'cases' must be a non-empty array");
    }
    for (const auto& cj : j.at("cases")) add(cj);
  } else {
    add(j);
  }
  // Every pairing is checked before any simulation starts.
  for (const auto& [c, mc] : cases) check_compatibility(c, mc);

  std::vector<McReport> reports;
  std::string csv = "case,trial,event,event_unrandomized,stop\n";
  bool failed = false;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CoverageResult r = run_coverage(cases[i].first, cases[i].second);
    failed = failed || r.report.verdict == Verdict::Fail;
    err << fmt::format("{}: freq {:.6g} bound {:.6g} {}\n", r.report.label, r.report.event_freq,
                       r.report.stated_bound, to_string(r.report.verdict));
    for (const auto& t : r.outcomes) {
      csv += fmt::format("{},{},{},{},{}\n", i, t.trial, t.event ? 1 : 0,
                         t.event_unrandomized ? 1 : 0, t.stop);
    }
    reports.push_back(r.report);
  }
  emit(reports_json(reports), o.output, out);
  if (!o.csv.empty()) io::write_atomic(o.csv, csv);
  return failed ? kExitFail : kExitOk;
}

struct TestOptions {
  std::string config;
  std::string builder = "self_normalized";
  std::string mode = "matrix";
  std::string input;
  std::string output;
  double alpha = 0.05;
  std::optional<double> gamma;
  std::optional<double> gamma_inv_sqrt;
  std::string mean, upper, variance, shape, mgf_row, mgf_c, mgf_v;
  std::optional<double> u;
};

std::optional<SymMat> literal(const std::string& text, const char* what) {
  if (text.empty()) return std::nullopt;
  return io::parse_matrix(io::parse_json(text, what), what);
}

// Sequential test over an ndjson stream of matrices.
class StreamTest {
 public:
  StreamTest(const TestOptions& o, Eigen::Index d) : mode_(o.mode), d_(d) {
    const SymMat zero = SymMat::zero(d);
    mean_ = literal(o.mean, "--mean").value_or(zero);
    require_same_dim(mean_, zero, "--mean");
    const auto shape = literal(o.shape, "--shape");
    cfg_ = shape ? TestConfig::from_shape(o.alpha, *shape) : TestConfig::isotropic(o.alpha, d);
    if (cfg_.a_thresh.dim() != d) throw ConfigError("--shape: dimension differs from the stream");
    const BuilderKind kind = parse_builder_kind(o.builder);
    BuilderParams bp;
    bp.kind = kind;
    bp.mean = mean_;
    bp.upper = literal(o.upper, "--upper");
    bp.variance = literal(o.variance, "--variance");
    if (kind == BuilderKind::Mgf) {
      if (o.mgf_row.empty()) throw ParamMismatch("the MGF builder needs --mgf-row");
      MgfParams mp;
      mp.kind = parse_mgf_kind(o.mgf_row);
      mp.c = literal(o.mgf_c, "--mgf-c");
      mp.v = literal(o.mgf_v, "--mgf-v");
      mp.validate();
      bp.mgf = mp;
    }
    bp.validate();
    GammaSchedule schedule = GammaSchedule::inv_sqrt(0.5);
    if (o.gamma) {
      schedule = GammaSchedule::constant(*o.gamma);
    } else if (o.gamma_inv_sqrt) {
      schedule = GammaSchedule::inv_sqrt(*o.gamma_inv_sqrt);
    } else if (kind == BuilderKind::Betting) {
      const double hi = betting_gamma_range(mean_, *bp.upper).second;
      schedule = GammaSchedule::constant(std::isfinite(hi) ? 0.5 * hi : 1.0);
    }
    if (mode_ == "scalar") {
      if (!bp.variance) throw ParamMismatch("scalar mode needs --variance");
      variance_ = *bp.variance;
    } else if (mode_ != "matrix") {
      throw ConfigError(fmt::format("unknown mode '{}'", mode_));
    }
    u_ = o.u.value_or(1.0);
    if (!(u_ > 0.0 && u_ <= 1.0)) throw ConfigError("--u must lie in (0, 1]");
    schedule_ = schedule;
    stream_.emplace(bp, schedule);
    y_.emplace(d);
    l_.emplace(d);
    inv_root_ = mat_pow(cfg_.a_thresh, -0.5);
  }

  Eigen::Index dim() const { return d_; }

  std::string step(const SymMat& x) {
    ++n_;
    double stat = 0.0;
    double lmax = 0.0;
    bool reject = false;
    if (mode_ == "matrix") {
      y_->step(stream_->next(x));
      const SymMat y = y_->value();
      lmax = lambda_max(y);
      stat = lambda_max(congruence(inv_root_.matrix(), y));
      reject = matrix_test_decide(y, cfg_);
    } else {
      l_->sn_step(x, mean_, variance_, schedule_.at(n_));
      stat = l_->log_value();
      reject = scalar_test_decide(l_->value(), d_, cfg_.alpha, u_);
    }
    if (reject && !rejected_at_) rejected_at_ = n_;
    Json line;
    line["n"] = n_;
    if (mode_ == "matrix") line["lambda_max"] = lmax;
    line[mode_ == "matrix" ? "lambda_max_ratio" : "log_l"] = stat;
    line["decision"] = reject ? "reject" : "continue";
    line["reject"] = reject;
    line["rejected"] = rejected_at_.has_value();
    return line.dump() + "\n";
  }

  std::string summary() const {
    Json s;
    s["summary"] = true;
    s["steps"] = n_;
    s["mode"] = mode_;
    s["alpha"] = cfg_.alpha;
    if (rejected_at_) {
      s["rejected_at"] = *rejected_at_;
    } else {
      s["rejected_at"] = nullptr;
    }
    return s.dump() + "\n";
  }

 private:
  std::string mode_;
  Eigen::Index d_;
  SymMat mean_ = SymMat::zero(1);
  SymMat variance_ = SymMat::identity(1);
  TestConfig cfg_;
  GammaSchedule schedule_ = GammaSchedule::constant(1.0);
  std::optional<FactorStream> stream_;
  std::optional<MatSupermartingale> y_;
  std::optional<TraceExpState> l_;
  SymMat inv_root_ = SymMat::identity(1);
  double u_ = 1.0;
  long n_ = 0;
  std::optional<long> rejected_at_;
};

void apply_test_config(TestOptions& o, const Json& j) {
  auto s = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = j.at(key).is_string() ? j.at(key).get<std::string>() : j.at(key).dump();
  };
  s("builder", o.builder);
  s("mode", o.mode);
  s("mean", o.mean);
  s("upper", o.upper);
  s("variance", o.variance);
  s("shape", o.shape);
  s("mgf_row", o.mgf_row);
  s("mgf_c", o.mgf_c);
  s("mgf_v", o.mgf_v);
  if (j.contains("alpha")) o.alpha = j.at("alpha").get<double>();
  if (j.contains("gamma")) o.gamma = j.at("gamma").get<double>();
  if (j.contains("u")) o.u = j.at("u").get<double>();
}

int run_test(TestOptions o, const std::vector<std::string>& explicit_flags, std::ostream& out) {
  if (!o.config.empty()) {
    // Config supplies defaults; flags given on the command line win.
    TestOptions from_file;
    apply_test_config(from_file, io::parse_json(io::read_file(o.config), o.config));
    auto given = [&](const char* f) {
      return std::find(explicit_flags.begin(), explicit_flags.end(), f) != explicit_flags.end();
    };
    if (!given("--builder")) o.builder = from_file.builder;
    if (!given("--mode")) o.mode = from_file.mode;
    if (!given("--alpha")) o.alpha = from_file.alpha;
    if (!given("--mean")) o.mean = from_file.mean;
    if (!given("--upper")) o.upper = from_file.upper;
    if (!given("--variance")) o.variance = from_file.variance;
    if (!given("--shape")) o.shape = from_file.shape;
    if (!given("--mgf-row")) o.mgf_row = from_file.mgf_row;
    if (!given("--mgf-c")) o.mgf_c = from_file.mgf_c;
    if (!given("--mgf-v")) o.mgf_v = from_file.mgf_v;
    if (!given("--gamma") && from_file.gamma) o.gamma = from_file.gamma;
    if (!given("--u") && from_file.u) o.u = from_file.u;
  }
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  (void)parse_builder_kind(o.builder);

  std::ifstream file;
  std::istream* in = nullptr;
  if (o.input == "-") {
    in = &std::cin;
  } else {
    file.open(o.input);
    if (!file) throw ConfigError(fmt::format("cannot read '{}'", o.input));
    in = &file;
  }
  std::optional<StreamTest> test;
  std::string text;
  std::string line;
  long lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SymMat x = SymMat::identity(1);
    try {
      Json j = Json::parse(line);
      if (j.is_object() && j.contains("x")) j = j.at("x");
      x = io::parse_matrix(j, "frame");
      if (!test) test.emplace(o, x.dim());
      if (x.dim() != test->dim()) throw ConfigError("frame dimension differs from the first frame");
    } catch (const Json::exception& e) {
      throw ConfigError(fmt::format("line {}: malformed frame ({})", lineno, e.what()));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
    std::string step;
    try {
      step = test->step(x);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
    out << step;
    text += step;
  }
  if (!test) throw ConfigError("input stream has no frames");
  const std::string summary = test->summary();
  out << summary;
  text += summary;
  if (!o.output.empty()) io::write_atomic(o.output, text);
  return kExitOk;
}

struct PowerOptions {
  std::string config;
  std::string output;
  std::string traces;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

int run_power(const PowerOptions& o, std::ostream& out) {
  PowerConfig cfg = io::parse_power_config(io::parse_json(io::read_file(o.config), o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  const PowerResult r = power_compare(cfg);
  emit(power_csv(r), o.output, out);
  if (!o.traces.empty()) io::write_atomic(o.traces, power_traces_csv(r));
  return kExitOk;
}

struct FalsifyOptions {
  double p = 1.5;
  long d = 2;
  long budget = 2000;
  long refine = 2000;
  int n_min = 2;
  int n_max = 4;
  int m_max = 3;
  std::optional<std::uint64_t> seed;
  std::optional<double> candidate;
  std::string output;
};

int run_falsify(const FalsifyOptions& o, std::ostream& out) {
  FalsifyConfig cfg;
  cfg.p = o.p;
  cfg.d = o.d;
  cfg.budget = o.budget;
  cfg.refine_steps = o.refine;
  cfg.n_min = o.n_min;
  cfg.n_max = o.n_max;
  cfg.m_max = o.m_max;
  cfg.seed = o.seed.value_or(io::default_seed());
  cfg.candidate_f = o.candidate;
  emit(to_json(falsify_conjecture(cfg)), o.output, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized matrix concentration bounds: coverage checks and sequential tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "matconc 1.0");

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Monte Carlo coverage check of a bound");
  verify->add_option("--config", vo.config, "Case or suite JSON")->required();
  verify->add_option("--output", vo.output, "McReport JSON (stdout when omitted)");
  verify->add_option("--csv", vo.csv, "Per-trial outcomes CSV");
  verify->add_option("--seed", vo.seed, "Base seed");
  verify->add_option("--workers", vo.workers, "Worker threads");
  verify->add_option("--trials", vo.trials, "Override the number of trials");

  TestOptions to;
  auto* test = app.add_subcommand("test", "Sequential matrix-mean test over an ndjson stream");
  test->add_option("--config", to.config, "Test parameters JSON");
  test->add_option("--builder", to.builder, "mgf | betting | self_normalized | symmetric");
  test->add_option("--mode", to.mode, "matrix | scalar");
  test->add_option("--alpha", to.alpha, "Level");
  test->add_option("--input", to.input, "ndjson stream of matrices ('-' for stdin)")->required();
  test->add_option("--output", to.output, "Copy of the per-step output");
  test->add_option("--gamma", to.gamma, "Constant γ");
  test->add_option("--gamma-inv-sqrt", to.gamma_inv_sqrt, "γ_n = c / sqrt(n)");
  test->add_option("--mean", to.mean, "Null mean M (JSON matrix)");
  test->add_option("--upper", to.upper, "Upper bound B for betting (JSON matrix)");
  test->add_option("--variance", to.variance, "Variance bound V (JSON matrix)");
  test->add_option("--shape", to.shape, "Threshold shape; rescaled so tr A^-1 = alpha");
  test->add_option("--mgf-row", to.mgf_row, "MGF row for the mgf builder");
  test->add_option("--mgf-c", to.mgf_c, "C for the Rademacher or uni-Gaussian row");
  test->add_option("--mgf-v", to.mgf_v, "V for the Bennett rows");
  test->add_option("--u", to.u, "Randomizer value for scalar mode");

  PowerOptions po;
  auto* power = app.add_subcommand("power-compare", "MATRIX against SCALAR rejection rates");
  power->add_option("--config", po.config, "Power-compare JSON")->required();
  power->add_option("--output", po.output, "CSV (stdout when omitted)");
  power->add_option("--traces", po.traces, "Per-path first rejection times CSV");
  power->add_option("--seed", po.seed, "Base seed");
  power->add_option("--workers", po.workers, "Worker threads");

  FalsifyOptions fo;
  auto* falsify = app.add_subcommand("falsify", "Search for large matrix p-Chebyshev ratios");
  falsify->add_option("--p", fo.p, "Exponent in [1, 2]");
  falsify->add_option("--d", fo.d, "Dimension");
  falsify->add_option("--budget", fo.budget, "Random instances");
  falsify->add_option("--refine", fo.refine, "Local refinement steps");
  falsify->add_option("--n-min", fo.n_min, "Fewest summands");
  falsify->add_option("--n-max", fo.n_max, "Most summands");
  falsify->add_option("--m-max", fo.m_max, "Largest support size of the law");
  falsify->add_option("--seed", fo.seed, "Seed");
  falsify->add_option("--candidate", fo.candidate, "Candidate f(p, d); defaults to 2^(2-p)");
  falsify->add_option("--output", fo.output, "Result JSON (stdout when omitted)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "matconc 1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitConfig;
  }

  try {
    if (verify->parsed()) return run_verify(vo, out, err);
    if (test->parsed()) return run_test(to, args, out);
    if (power->parsed()) return run_power(po, out);
    if (falsify->parsed()) return run_falsify(fo, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IncompatiblePair& e) {
    err << "incompatible bound and generator: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParamMismatch& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GammaOutOfRange& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace matconc::cli
