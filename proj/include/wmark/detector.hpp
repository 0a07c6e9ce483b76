#pragma once

// Hypothesis testing on token sequences. Under the null (text written
// without the watermark key) each position lands on the green list with
// probability gamma_eff = floor(gamma N)/N, so the green count follows
// BIN(T, gamma_eff). All tail probabilities are exact log-space sums, not
// normal approximations.

#include <cstdint>
#include <span>
#include <vector>

#include "wmark/vocab.hpp"

namespace wmark {

struct GreenCount {
  std::size_t n_green = 0;
  std::vector<std::uint8_t> indicators;  // one 0/1 per body position
};

// Recomputes the keyed split at every position of `body`; position 1 seeds
// from `last_prompt_token`. Throws DataError on an empty body.
GreenCount count_green(std::span<const TokenId> body,
                       TokenId last_prompt_token, std::uint64_t key,
                       double gamma, std::size_t vocab_size);

// P[N >= n_star] for N ~ BIN(trials, q). n_star may be trials + 1 (tail 0).
double binomial_tail(std::size_t n_star, std::size_t trials, double q);

struct Threshold {
  std::size_t n_star = 0;
  double alpha_star = 1.0;  // achieved false-positive rate at n_star
};

// Smallest n_star whose null tail probability is <= alpha_target.
Threshold threshold_for_alpha(std::size_t trials, double gamma,
                              std::size_t vocab_size, double alpha_target);

// Tail probability at n_star when the per-position green probability rises
// by expected_shift over the null. Throws InvariantError if the shifted
// probability leaves [0, 1].
double power(std::size_t trials, double gamma, std::size_t vocab_size,
             double expected_shift, std::size_t n_star);

struct DetectionReport {
  std::size_t n_green = 0;
  std::size_t length = 0;
  std::size_t n_star = 0;
  double alpha_star = 1.0;
  double gamma_eff = 0.0;
  double p_value = 1.0;
  bool reject_null = false;  // n_green >= n_star
};

DetectionReport detect(std::span<const TokenId> body,
                       TokenId last_prompt_token, std::uint64_t key,
                       double gamma, std::size_t vocab_size,
                       double alpha_target);

}  // namespace wmark
