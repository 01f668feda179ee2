#include "matconc/power.hpp"

#include <exception>
#include <thread>

#include <fmt/format.h>

#include "matconc/randomizers.hpp"

namespace matconc {

void PowerConfig::validate() const {
  if (!generator) throw ConfigError("power-compare needs a generator");
  if (null_mean.dim() != generator->dim() || variance.dim() != generator->dim() ||
      test.a_thresh.dim() != generator->dim()) {
    throw ConfigError("power-compare: dimensions of mean, variance, threshold and generator differ");
  }
  if (!is_psd(variance)) throw ConfigError("power-compare: variance must be PSD");
  test.validate();
  if (n_max < 1) throw ConfigError("horizon must be at least 1");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

namespace {

PowerPath run_path(const PowerConfig& cfg, std::int64_t t) {
  const Generator& g = *cfg.generator;
  Rng data = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream::kData);
  Rng latent_rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream::kLatent);
  const PathLatent latent = g.begin_path(latent_rng);
  double u = 1.0;
  if (cfg.randomized_scalar) {
    u = ScalarRandomizer::uniform01(cfg.seed).for_trial(static_cast<std::uint64_t>(t)).sample();
  }
  BuilderParams bp;
  bp.kind = BuilderKind::SelfNormalized;
  bp.mean = cfg.null_mean;
  bp.variance = cfg.variance;
  FactorStream stream(bp, cfg.schedule);
  MatSupermartingale y(g.dim());
  TraceExpState l(g.dim());
  PowerPath out;
  for (long n = 1; n <= cfg.n_max; ++n) {
    const SymMat x = g.draw(data, latent);
    const double gamma = cfg.schedule.at(n);
    y.step(stream.next(x));
    l.sn_step(x, cfg.null_mean, cfg.variance, gamma);
    if (out.reject_matrix == 0 && matrix_test_decide(y.value(), cfg.test)) out.reject_matrix = n;
    if (out.reject_scalar == 0 && scalar_test_decide(l.value(), g.dim(), cfg.test.alpha, u)) {
      out.reject_scalar = n;
    }
    if (out.reject_matrix && out.reject_scalar) break;
  }
  return out;
}

}  // namespace

PowerResult power_compare(const PowerConfig& cfg) {
  cfg.validate();
  PowerResult res;
  res.paths.resize(static_cast<std::size_t>(cfg.trials));
  const int workers = static_cast<int>(std::min<std::int64_t>(cfg.workers, cfg.trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      const std::int64_t lo = cfg.trials * w / workers;
      const std::int64_t hi = cfg.trials * (w + 1) / workers;
      for (std::int64_t t = lo; t < hi; ++t) res.paths[static_cast<std::size_t>(t)] = run_path(cfg, t);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& th : threads) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::int64_t> first_m(static_cast<std::size_t>(cfg.n_max) + 1, 0);
  std::vector<std::int64_t> first_s(static_cast<std::size_t>(cfg.n_max) + 1, 0);
  for (const auto& p : res.paths) {
    if (p.reject_matrix) ++first_m[static_cast<std::size_t>(p.reject_matrix)];
    if (p.reject_scalar) ++first_s[static_cast<std::size_t>(p.reject_scalar)];
  }
  std::int64_t cm = 0;
  std::int64_t cs = 0;
  const double total = static_cast<double>(cfg.trials);
  for (long n = 1; n <= cfg.n_max; ++n) {
    cm += first_m[static_cast<std::size_t>(n)];
    cs += first_s[static_cast<std::size_t>(n)];
    res.power_matrix.push_back(static_cast<double>(cm) / total);
    res.power_scalar.push_back(static_cast<double>(cs) / total);
  }
  return res;
}

std::string power_csv(const PowerResult& r) {
  std::string out = "n,reject_matrix,reject_scalar\n";
  for (std::size_t i = 0; i < r.power_matrix.size(); ++i) {
    out += fmt::format("{},{:.17g},{:.17g}\n", i + 1, r.power_matrix[i], r.power_scalar[i]);
  }
  return out;
}

std::string power_traces_csv(const PowerResult& r) {
  std::string out = "path,reject_matrix,reject_scalar\n";
  for (std::size_t i = 0; i < r.paths.size(); ++i) {
    out += fmt::format("{},{},{}\n", i, r.paths[i].reject_matrix, r.paths[i].reject_scalar);
  }
  return out;
}

}  // namespace matconc
