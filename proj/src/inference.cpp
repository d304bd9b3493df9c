#include "ce/inference.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "ce/rng.hpp"
#include "ce/stats.hpp"

namespace ce {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

BcInterval bc_interval(const Eigen::Ref<const Eigen::VectorXd>& replicates, double point,
                       double level) {
  if (replicates.size() < 2) throw InferenceError("too few replicates for an interval");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("interval level must be in (0, 1)");
  const double alpha = 1.0 - level;
  std::vector<double> v(replicates.data(), replicates.data() + replicates.size());

  const double below =
      static_cast<double>((replicates.array() < point).count()) / static_cast<double>(v.size());
  BcInterval out;
  if (below == 0.0 || below == 1.0) {
    // Everything on one side: z0 is infinite, fall back to percentile.
    out.fell_back = true;
    out.lower = quantile_type7(v, alpha / 2.0);
    out.upper = quantile_type7(v, 1.0 - alpha / 2.0);
    return out;
  }
  const double z0 = norm_quantile(below);
  const double zlo = norm_quantile(alpha / 2.0);
  const double zhi = norm_quantile(1.0 - alpha / 2.0);
  out.lower = quantile_type7(v, norm_cdf(2.0 * z0 + zlo));
  out.upper = quantile_type7(v, norm_cdf(2.0 * z0 + zhi));
  return out;
}

BootstrapResult bootstrap(const ObservationTable& table, const PointEstimator& estimator,
                          const BootstrapOptions& options) {
  if (options.replicates < 2) throw ConfigError("need at least 2 bootstrap replicates");
  if (!(options.level > 0.0 && options.level < 1.0))
    throw ConfigError("interval level must be in (0, 1)");

  BootstrapResult res;
  res.n_requested = static_cast<std::size_t>(options.replicates);
  res.seed = options.seed;
  res.point = estimator(table);

  const auto n = table.n();
  const Rng root(options.seed);
  std::vector<double> values(res.n_requested, 0.0);
  std::vector<char> ok(res.n_requested, 0);

  auto run_replicate = [&](std::size_t r) {
    Rng rng = root.split(r);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& idx : rows)
      idx = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    try {
      values[r] = estimator(table.select_rows(rows));
      ok[r] = std::isfinite(values[r]) ? 1 : 0;
    } catch (const std::runtime_error&) {
      ok[r] = 0;
    }
  };

  const int threads = std::min<int>(resolve_threads(options.threads),
                                    static_cast<int>(res.n_requested));
  if (threads <= 1) {
    for (std::size_t r = 0; r < res.n_requested; ++r) run_replicate(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t r = next.fetch_add(1); r < res.n_requested; r = next.fetch_add(1))
          run_replicate(r);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<double> kept;
  kept.reserve(res.n_requested);
  for (std::size_t r = 0; r < res.n_requested; ++r)
    if (ok[r]) kept.push_back(values[r]);
  res.n_failed = res.n_requested - kept.size();
  const double failure_fraction =
      static_cast<double>(res.n_failed) / static_cast<double>(res.n_requested);
  if (failure_fraction > options.max_failure_fraction)
    throw InferenceError("bootstrap unstable: " + std::to_string(res.n_failed) + " of " +
                         std::to_string(res.n_requested) +
                         " replicates failed (limit " +
                         std::to_string(options.max_failure_fraction) + ")");
  if (res.n_failed > 0)
    res.warnings.push_back(std::to_string(res.n_failed) + " of " +
                           std::to_string(res.n_requested) + " replicates failed; excluded");
  if (kept.size() < 2) throw InferenceError("too few successful replicates");

  res.replicates =
      Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  res.replicate_mean = res.replicates.mean();
  res.se = sd(res.replicates);

  const double alpha = 1.0 - options.level;
  const double z = norm_quantile(1.0 - alpha / 2.0);
  res.normal = {res.point - z * res.se, res.point + z * res.se, options.level, "normal"};
  res.percentile = {quantile_type7(kept, alpha / 2.0), quantile_type7(kept, 1.0 - alpha / 2.0),
                    options.level, "percentile"};
  const BcInterval bc = bc_interval(res.replicates, res.point, options.level);
  res.bias_corrected = {bc.lower, bc.upper, options.level, "bc"};
  if (bc.fell_back) {
    res.bias_corrected.kind = "bc-fallback-percentile";
    res.warnings.push_back(
        "all replicates fell on one side of the point estimate; bias-corrected interval "
        "fell back to the percentile interval");
  }
  return res;
}

}  // namespace ce
