#pragma once

// Token-by-token sampling from the watermarked conditional distribution:
// model pmf -> keyed green split -> shift rule -> minimal transform ->
// inverse-CDF draw. Every run is a pure function of (model, prompt, config),
// so traces are bit-identical across repeats.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "wmark/lm.hpp"
#include "wmark/watermark.hpp"

namespace wmark {

struct GenerationConfig {
  std::uint64_t key = 0;
  double gamma = 0.25;
  ShiftSpec shift = ShiftSpec::kgw(0.0);
  std::size_t steps = 30;  // tokens to generate (T)
  std::uint64_t sampler_seed = 0;
  // Fresh pseudo-random split key every step. Detection with a single key
  // is impossible then; the mode exists to restore independence of the
  // green indicators for calibration studies.
  bool oracle_mode = false;
  // Damage rates and the expected-score term need log passes over the full
  // pmf each step. Bias studies that only read gamma_t can turn them off.
  bool record_damage = true;
};

struct StepRecord {
  std::size_t t = 0;  // 1-based position within the generated body
  TokenId token = 0;
  double gamma_t = 0.0;
  double damage_b = 0.0;        // +inf on degenerate splits; 0 if not recorded
  double damage_b_prime = 0.0;  // likewise
  double delta = 0.0;
  bool green = false;
  bool no_freedom = false;
  double log_p = 0.0;           // log p_t(token) under the original model
  double expected_log_p = 0.0;  // sum over v of watermarked(v) * log p_t(v)
};

struct SequenceTrace {
  std::vector<TokenId> prompt;
  std::vector<TokenId> body;
  std::vector<StepRecord> steps;
};

// Inverse-CDF draw: the smallest v whose cumulative mass exceeds u, for
// u in [0, 1). Entries with zero mass are never returned.
TokenId sample_pmf(const Pmf& pmf, double u);

// Generates cfg.steps tokens after `prompt`. The split at position 1 seeds
// from the last prompt token (the sentinel id when the prompt is empty).
SequenceTrace generate(const NextTokenModel& model,
                       std::span<const TokenId> prompt,
                       const GenerationConfig& cfg);

// Independent sampler streams per (prompt index, sequence index), all
// derived from cfg.sampler_seed. Output order: prompt-major.
std::vector<SequenceTrace> generate_batch(
    const NextTokenModel& model,
    std::span<const std::vector<TokenId>> prompts,
    const GenerationConfig& cfg, std::size_t sequences_per_prompt);

// Per-position records as line-delimited JSON objects with named fields
// (t, token, gamma_t, B, B_prime, delta, green, no_freedom, log_p,
// expected_log_p).
void write_trace_jsonl(std::ostream& out, const SequenceTrace& trace);

}  // namespace wmark
