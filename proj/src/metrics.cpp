#include "wmark/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wmark/errors.hpp"
#include "wmark/greensplit.hpp"

namespace wmark {

namespace {

Estimate mean_se(std::span<const double> values) {
  if (values.empty()) throw DataError("estimator needs at least one sequence");
  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double se = 0.0;
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / static_cast<double>(n - 1) /
                   static_cast<double>(n));
  }
  return {mean, se, n};
}

template <typename Fn>
Estimate per_sequence(std::span<const SequenceTrace> traces, Fn&& fn) {
  std::vector<double> values;
  values.reserve(traces.size());
  for (const SequenceTrace& trace : traces) {
    if (trace.steps.empty()) throw DataError("trace has no steps");
    values.push_back(fn(trace));
  }
  return mean_se(values);
}

}  // namespace

Estimate estimate_delta_Ng(std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps) sum += rec.delta;
    return sum;
  });
}

Estimate estimate_ng_mean(std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps) sum += rec.green ? 1.0 : 0.0;
    return sum;
  });
}

Estimate estimate_logppl(std::span<const SequenceTrace> traces,
                         LogpplMode mode) {
  return per_sequence(traces, [mode](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps)
      sum += mode == LogpplMode::Naive ? rec.log_p : rec.expected_log_p;
    return -sum / static_cast<double>(trace.steps.size());
  });
}

Estimate estimate_between_token_variance(
    std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    const std::size_t len = trace.steps.size();
    if (len < 2) throw DataError("variance needs sequences of length >= 2");
    double mean = 0.0;
    for (const StepRecord& rec : trace.steps) mean += -rec.log_p;
    mean /= static_cast<double>(len);
    double ss = 0.0;
    for (const StepRecord& rec : trace.steps)
      ss += (-rec.log_p - mean) * (-rec.log_p - mean);
    return ss / static_cast<double>(len);
  });
}

Estimate estimate_combined_objective(std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps) sum += rec.log_p * rec.log_p;
    return sum / static_cast<double>(trace.steps.size());
  });
}

Estimate estimate_gamma_bar(std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps) sum += rec.gamma_t;
    return sum / static_cast<double>(trace.steps.size());
  });
}

Estimate estimate_delta_logppl_from_damage(
    std::span<const SequenceTrace> traces) {
  return per_sequence(traces, [](const SequenceTrace& trace) {
    double sum = 0.0;
    for (const StepRecord& rec : trace.steps)
      if (rec.delta > 0.0) sum += rec.delta * rec.damage_b;
    return sum / static_cast<double>(trace.steps.size());
  });
}

double nearest_rank(std::span<const double> sorted_pool, double q) {
  if (sorted_pool.empty()) throw DataError("empty percentile pool");
  if (!(q > 0.0) || !(q <= 1.0))
    throw InvariantError("quantile must lie in (0, 1]");
  const double target = q * static_cast<double>(sorted_pool.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(target));
  if (rank < 1) rank = 1;
  if (rank > sorted_pool.size()) rank = sorted_pool.size();
  return sorted_pool[rank - 1];
}

std::vector<double> logppl_percentiles(std::span<const SequenceTrace> traces,
                                       std::span<const double> qs) {
  std::vector<double> pool;
  for (const SequenceTrace& trace : traces)
    for (const StepRecord& rec : trace.steps) pool.push_back(-rec.log_p);
  if (pool.empty()) throw DataError("empty percentile pool");
  std::sort(pool.begin(), pool.end());
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(nearest_rank(pool, q));
  return out;
}

std::vector<std::size_t> ng_histogram(std::span<const SequenceTrace> traces) {
  if (traces.empty()) throw DataError("no traces to histogram");
  const std::size_t len = traces.front().steps.size();
  std::vector<std::size_t> hist(len + 1, 0);
  for (const SequenceTrace& trace : traces) {
    if (trace.steps.size() != len)
      throw DataError("traces of mixed lengths cannot share a histogram");
    std::size_t n_green = 0;
    for (const StepRecord& rec : trace.steps) n_green += rec.green ? 1 : 0;
    ++hist[n_green];
  }
  return hist;
}

double ng_kl_divergence(std::span<const std::size_t> histogram,
                        std::size_t trials) {
  if (histogram.size() != trials + 1)
    throw InvariantError("histogram support must be {0..T}");
  std::size_t total = 0;
  std::size_t green = 0;
  for (std::size_t k = 0; k <= trials; ++k) {
    total += histogram[k];
    green += k * histogram[k];
  }
  if (total == 0) throw DataError("empty histogram");

  const double qhat = static_cast<double>(green) /
                      (static_cast<double>(trials) *
                       static_cast<double>(total));
  const double floor_log = std::log(1e-12);
  const double lg_trials = std::lgamma(static_cast<double>(trials) + 1.0);

  double kl = 0.0;
  for (std::size_t k = 0; k <= trials; ++k) {
    if (histogram[k] == 0) continue;
    const double emp = static_cast<double>(histogram[k]) /
                       static_cast<double>(total);
    const double dk = static_cast<double>(k);
    double log_bin;
    if (qhat <= 0.0)
      log_bin = k == 0 ? 0.0 : floor_log;
    else if (qhat >= 1.0)
      log_bin = k == trials ? 0.0 : floor_log;
    else
      log_bin = lg_trials - std::lgamma(dk + 1.0) -
                std::lgamma(static_cast<double>(trials - k) + 1.0) +
                dk * std::log(qhat) +
                (static_cast<double>(trials) - dk) * std::log1p(-qhat);
    if (log_bin < floor_log) log_bin = floor_log;
    kl += emp * (std::log(emp) - log_bin);
  }
  return kl;
}

GammaBias gamma_bias_test(const NextTokenModel& model,
                          std::span<const std::vector<TokenId>> prompts,
                          const GenerationConfig& cfg,
                          std::size_t sequences_per_prompt) {
  GenerationConfig plain = cfg;
  plain.shift = ShiftSpec::kgw(0.0);
  plain.record_damage = false;

  std::vector<double> gammas;
  gammas.reserve(prompts.size() * sequences_per_prompt * cfg.steps);
  const auto traces =
      generate_batch(model, prompts, plain, sequences_per_prompt);
  for (const SequenceTrace& trace : traces)
    for (const StepRecord& rec : trace.steps) gammas.push_back(rec.gamma_t);
  if (gammas.empty()) throw DataError("no positions sampled");

  const std::size_t n = gammas.size();
  double mean = 0.0;
  for (double g : gammas) mean += g;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double g : gammas) ss += (g - mean) * (g - mean);
  const double sd =
      n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  const double se = sd / std::sqrt(static_cast<double>(n));

  GammaBias bias;
  bias.mean = mean;
  bias.se = se;
  bias.positions = n;
  const double target = effective_gamma(cfg.gamma, model.vocab_size());
  bias.z = se > 0.0 ? (mean - target) / se : 0.0;
  return bias;
}

std::vector<BoundPoint> pareto_bound(std::span<const SequenceTrace> baseline,
                                     std::span<const double> betas) {
  if (baseline.empty()) throw DataError("bound needs a baseline sample");
  std::vector<BoundPoint> points;
  points.reserve(betas.size());
  for (double beta : betas) {
    std::vector<double> xs, ys;
    xs.reserve(baseline.size());
    ys.reserve(baseline.size());
    for (const SequenceTrace& trace : baseline) {
      double x = 0.0, y = 0.0;
      for (const StepRecord& rec : trace.steps) {
        if (!(rec.damage_b <= beta)) continue;  // +inf sentinels drop here
        const double headroom = 1.0 - rec.gamma_t;
        x += headroom;
        y += headroom * rec.damage_b;
      }
      xs.push_back(x);
      ys.push_back(y / static_cast<double>(trace.steps.size()));
    }
    points.push_back({beta, mean_se(xs), mean_se(ys)});
  }
  return points;
}

std::vector<BoundPoint> pareto_bound(
    const NextTokenModel& model,
    std::span<const std::vector<TokenId>> prompts,
    const GenerationConfig& cfg, std::size_t sequences_per_prompt,
    std::span<const double> betas) {
  GenerationConfig plain = cfg;
  plain.shift = ShiftSpec::kgw(0.0);
  plain.record_damage = true;
  const auto traces =
      generate_batch(model, prompts, plain, sequences_per_prompt);
  return pareto_bound(traces, betas);
}

std::vector<double> pooled_damage(std::span<const SequenceTrace> traces) {
  std::vector<double> pool;
  for (const SequenceTrace& trace : traces)
    for (const StepRecord& rec : trace.steps)
      if (std::isfinite(rec.damage_b)) pool.push_back(rec.damage_b);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<double> beta_grid_from_baseline(
    std::span<const SequenceTrace> baseline,
    std::span<const double> quantiles) {
  const std::vector<double> pool = pooled_damage(baseline);
  if (pool.empty()) throw DataError("baseline sample has no finite damage");
  std::vector<double> grid;
  grid.reserve(quantiles.size());
  for (double q : quantiles) grid.push_back(nearest_rank(pool, q));
  return grid;
}

}  // namespace wmark
