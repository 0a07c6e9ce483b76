#pragma once

// Estimators over generation traces. Tokens inside a sequence are dependent
// (the key ties neighbouring splits), so every mean reports its standard
// error across sequences, never across tokens. The one exception is
// gamma_bias_test, whose z-score deliberately assumes per-position
// independence; that assumption failing at scale is the effect it measures.

#include <cstdint>
#include <span>
#include <vector>

#include "wmark/generator.hpp"

namespace wmark {

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // standard error of the mean; 0 when n < 2
  std::size_t n = 0;
};

// Mean over sequences of the per-sequence green-count shift sum(delta_t).
Estimate estimate_delta_Ng(std::span<const SequenceTrace> traces);

// Mean over sequences of the observed green count.
Estimate estimate_ng_mean(std::span<const SequenceTrace> traces);

// Log-perplexity, always scored under the original model's pmf.
//   Naive: -(1/T) sum log p_t(v_t) over sampled tokens.
//   Rao:   -(1/T) sum over v of watermarked_t(v) log p_t(v), the
//          variance-reduced form; requires traces recorded with damage.
enum class LogpplMode { Naive, Rao };
Estimate estimate_logppl(std::span<const SequenceTrace> traces,
                         LogpplMode mode);

// Within-sequence variance of -log p_t(v_t), averaged over sequences.
// Throws DataError when sequences are shorter than 2 tokens.
Estimate estimate_between_token_variance(std::span<const SequenceTrace> traces);

// Mean over sequences of (1/T) sum (log p_t(v_t))^2, which equals
// log-perplexity squared plus the between-token variance per sequence.
Estimate estimate_combined_objective(std::span<const SequenceTrace> traces);

// Per-sequence mean green mass, averaged over sequences.
Estimate estimate_gamma_bar(std::span<const SequenceTrace> traces);

// Prediction of the log-perplexity change from per-step damage alone:
// mean over sequences of (1/T) sum delta_t * B_t (delta_t = 0 terms
// contribute nothing, so degenerate-split positions stay finite).
Estimate estimate_delta_logppl_from_damage(
    std::span<const SequenceTrace> traces);

// Nearest-rank quantile of a sorted pool: element at rank
// max(1, ceil(q * size)), 1-based.
double nearest_rank(std::span<const double> sorted_pool, double q);

// Pooled per-token -log p_t(v_t) quantiles, one per entry of qs.
std::vector<double> logppl_percentiles(std::span<const SequenceTrace> traces,
                                       std::span<const double> qs);

// Green-count histogram over support {0..T}. All traces must share T.
std::vector<std::size_t> ng_histogram(std::span<const SequenceTrace> traces);

// KL(empirical || BIN(T, qhat)) with qhat the pooled empirical green
// fraction. Binomial masses are floored at 1e-12 so empirical outcomes the
// fitted binomial deems impossible keep the divergence finite.
double ng_kl_divergence(std::span<const std::size_t> histogram,
                        std::size_t trials);

struct GammaBias {
  double mean = 0.0;  // average green mass over all sampled positions
  double se = 0.0;    // per-position standard error (independence assumed)
  double z = 0.0;     // (mean - gamma_eff) / se
  std::size_t positions = 0;
};

// Generates without a watermark and measures the green mass the key
// actually produces. A fixed key re-uses one split per preceding token, so
// its bias never averages out; fresh-key oracle runs are the unbiased
// control.
GammaBias gamma_bias_test(const NextTokenModel& model,
                          std::span<const std::vector<TokenId>> prompts,
                          const GenerationConfig& cfg,
                          std::size_t sequences_per_prompt);

struct BoundPoint {
  double beta = 0.0;
  Estimate delta_ng;      // sum over steps of (1-Gamma) [B <= beta]
  Estimate delta_logppl;  // (1/T) sum of (1-Gamma) [B <= beta] B
};

// Trade-off frontier estimated from NON-watermarked traces: for each beta,
// the green-count gain and log-perplexity cost the threshold rule would
// realize. Computed per sequence, then averaged, so the errors are
// comparable with watermarked-run estimates.
std::vector<BoundPoint> pareto_bound(std::span<const SequenceTrace> baseline,
                                     std::span<const double> betas);

// Convenience overload that generates the baseline sample itself (cfg's
// shift is ignored; damage recording is forced on).
std::vector<BoundPoint> pareto_bound(
    const NextTokenModel& model,
    std::span<const std::vector<TokenId>> prompts,
    const GenerationConfig& cfg, std::size_t sequences_per_prompt,
    std::span<const double> betas);

// Finite damage values pooled over all steps, sorted ascending.
std::vector<double> pooled_damage(std::span<const SequenceTrace> traces);

// Damage quantiles of a baseline run, used as a threshold grid that spans
// the frontier from barely-watermarked to nearly hard.
std::vector<double> beta_grid_from_baseline(
    std::span<const SequenceTrace> baseline,
    std::span<const double> quantiles);

}  // namespace wmark
