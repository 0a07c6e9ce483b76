#include "wmark/generator.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "wmark/errors.hpp"
#include "wmark/rng.hpp"

namespace wmark {

namespace {

// Distinguishes the per-step key stream of oracle mode from the sampler
// stream ("oracle" in ASCII).
constexpr std::uint64_t kOracleTag = 0x6F7261636C65ull;

}  // namespace

TokenId sample_pmf(const Pmf& pmf, double u) {
  double cum = 0.0;
  std::size_t last_positive = pmf.size();
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    if (pmf[v] <= 0.0) continue;
    cum += pmf[v];
    last_positive = v;
    if (u < cum) return static_cast<TokenId>(v);
  }
  if (last_positive == pmf.size())
    throw InvariantError("cannot sample from an all-zero pmf");
  return static_cast<TokenId>(last_positive);
}

SequenceTrace generate(const NextTokenModel& model,
                       std::span<const TokenId> prompt,
                       const GenerationConfig& cfg) {
  if (cfg.steps < 1) throw InvariantError("generation length must be >= 1");
  if (!cfg.record_damage && (cfg.shift.kind == ShiftSpec::Kind::OPT ||
                             cfg.shift.kind == ShiftSpec::Kind::OPT_PRIME))
    throw InvariantError("threshold rules need damage recording enabled");
  const std::size_t n = model.vocab_size();

  SplitMix64 sampler(cfg.sampler_seed);
  SplitMix64 oracle_keys(mix_pair(mix_pair(cfg.key, cfg.sampler_seed),
                                  kOracleTag));

  SequenceTrace trace;
  trace.prompt.assign(prompt.begin(), prompt.end());
  trace.body.reserve(cfg.steps);
  trace.steps.reserve(cfg.steps);

  std::vector<TokenId> context(prompt.begin(), prompt.end());
  Pmf pmf;

  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const TokenId prev = context.empty() ? kUnknownId : context.back();
    const std::uint64_t key = cfg.oracle_mode ? oracle_keys.next() : cfg.key;
    const GreenMask mask = split(key, prev, cfg.gamma, n);
    model.next_pmf(context, pmf);
    if (pmf.size() != n)
      throw InvariantError("model pmf size disagrees with vocab size");

    StepRecord rec;
    rec.t = t;

    StepStats st;
    if (cfg.record_damage) {
      st = step_stats(pmf, mask);
      rec.damage_b = damage_B(st);
      rec.damage_b_prime = damage_B_prime(st);
    } else {
      st.gamma = gamma_t(pmf, mask);
    }
    rec.gamma_t = st.gamma;

    const ShiftValue sv = shift_value(cfg.shift, st);
    rec.delta = sv.value;
    rec.no_freedom = sv.no_freedom;

    // Watermarked entries are factor * original within each list, so the
    // draw walks the original pmf with per-list factors instead of
    // materializing the transformed vector.
    double green_factor = 1.0;
    double red_factor = 1.0;
    if (sv.value > 0.0) {
      green_factor = 1.0 + sv.value / st.gamma;
      red_factor = st.gamma >= 1.0
                       ? 0.0
                       : std::max(0.0, 1.0 - sv.value / (1.0 - st.gamma));
    }

    const double u = sampler.next_unit();
    double cum = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t v = 0; v < n; ++v) {
      const double p = pmf[v];
      if (p <= 0.0) continue;
      const double w = p * (mask.bits[v] ? green_factor : red_factor);
      if (w <= 0.0) continue;
      cum += w;
      last_positive = v;
      if (u < cum) {
        pick = v;
        break;
      }
    }
    if (pick == n) pick = last_positive;
    if (pick == n)
      throw InvariantError("watermarked pmf has no positive mass");

    rec.token = static_cast<TokenId>(pick);
    rec.green = mask.bits[pick];
    rec.log_p = std::log(pmf[pick]);
    if (cfg.record_damage)
      rec.expected_log_p = green_factor * st.s_green +
                           red_factor * (st.s_all - st.s_green);

    trace.body.push_back(rec.token);
    trace.steps.push_back(rec);
    context.push_back(rec.token);
  }
  return trace;
}

std::vector<SequenceTrace> generate_batch(
    const NextTokenModel& model,
    std::span<const std::vector<TokenId>> prompts,
    const GenerationConfig& cfg, std::size_t sequences_per_prompt) {
  const std::size_t jobs = prompts.size() * sequences_per_prompt;
  std::vector<SequenceTrace> traces(jobs);

  // Each sequence derives its own sampler stream from (prompt, repeat)
  // indices, so evaluation order cannot affect the result; sequences run
  // concurrently and land in preassigned slots.
  auto run_one = [&](std::size_t job) {
    const std::size_t i = job / sequences_per_prompt;
    const std::size_t j = job % sequences_per_prompt;
    GenerationConfig seq_cfg = cfg;
    seq_cfg.sampler_seed =
        mix_pair(mix_pair(cfg.sampler_seed, static_cast<std::uint64_t>(i)),
                 static_cast<std::uint64_t>(j));
    traces[job] = generate(model, prompts[i], seq_cfg);
  };

  const std::size_t workers =
      std::min<std::size_t>(std::thread::hardware_concurrency(), jobs);
  if (workers <= 1) {
    for (std::size_t job = 0; job < jobs; ++job) run_one(job);
    return traces;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t job = next.fetch_add(1);
        if (job >= jobs) return;
        try {
          run_one(job);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return traces;
}

void write_trace_jsonl(std::ostream& out, const SequenceTrace& trace) {
  for (const StepRecord& rec : trace.steps) {
    nlohmann::ordered_json row;
    row["t"] = rec.t;
    row["token"] = rec.token;
    row["gamma_t"] = rec.gamma_t;
    row["B"] = rec.damage_b;
    row["B_prime"] = rec.damage_b_prime;
    row["delta"] = rec.delta;
    row["green"] = rec.green;
    row["no_freedom"] = rec.no_freedom;
    row["log_p"] = rec.log_p;
    row["expected_log_p"] = rec.expected_log_p;
    out << row.dump() << '\n';
  }
}

}  // namespace wmark
