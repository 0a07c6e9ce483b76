#include "wmark/detector.hpp"

#include <cmath>

#include "wmark/errors.hpp"
#include "wmark/greensplit.hpp"

namespace wmark {

GreenCount count_green(std::span<const TokenId> body,
                       TokenId last_prompt_token, std::uint64_t key,
                       double gamma, std::size_t vocab_size) {
  if (body.empty()) throw DataError("cannot score an empty sequence");
  GreenCount result;
  result.indicators.reserve(body.size());
  TokenId prev = last_prompt_token;
  for (TokenId token : body) {
    if (token >= vocab_size)
      throw DataError("token id out of vocabulary range");
    const GreenMask mask = split(key, prev, gamma, vocab_size);
    const bool green = mask.contains(token);
    result.indicators.push_back(green ? 1 : 0);
    result.n_green += green ? 1 : 0;
    prev = token;
  }
  return result;
}

double binomial_tail(std::size_t n_star, std::size_t trials, double q) {
  if (n_star > trials + 1)
    throw InvariantError("threshold beyond trials + 1");
  if (!(q >= 0.0) || !(q <= 1.0))
    throw InvariantError("success probability outside [0, 1]");
  if (n_star == 0) return 1.0;
  if (n_star == trials + 1) return 0.0;
  if (q == 0.0) return 0.0;              // n_star >= 1 here
  if (q == 1.0) return 1.0;              // n_star <= trials here

  const double log_q = std::log(q);
  const double log_1q = std::log1p(-q);
  const double lg_total = std::lgamma(static_cast<double>(trials) + 1.0);
  double sum = 0.0;
  for (std::size_t n = n_star; n <= trials; ++n) {
    const double dn = static_cast<double>(n);
    const double log_term =
        lg_total - std::lgamma(dn + 1.0) -
        std::lgamma(static_cast<double>(trials - n) + 1.0) + dn * log_q +
        (static_cast<double>(trials) - dn) * log_1q;
    sum += std::exp(log_term);
  }
  return sum < 1.0 ? sum : 1.0;
}

Threshold threshold_for_alpha(std::size_t trials, double gamma,
                              std::size_t vocab_size, double alpha_target) {
  if (!(alpha_target > 0.0) || !(alpha_target <= 1.0))
    throw InvariantError("alpha target must lie in (0, 1]");
  const double q = effective_gamma(gamma, vocab_size);
  // binomial_tail is non-increasing in n_star, so the smallest qualifying
  // threshold is found by bisection.
  std::size_t lo = 0, hi = trials + 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (binomial_tail(mid, trials, q) <= alpha_target)
      hi = mid;
    else
      lo = mid + 1;
  }
  return {lo, binomial_tail(lo, trials, q)};
}

double power(std::size_t trials, double gamma, std::size_t vocab_size,
             double expected_shift, std::size_t n_star) {
  const double q = effective_gamma(gamma, vocab_size) + expected_shift;
  if (!(q >= 0.0) || !(q <= 1.0))
    throw InvariantError("shifted green probability outside [0, 1]");
  return binomial_tail(n_star, trials, q);
}

DetectionReport detect(std::span<const TokenId> body,
                       TokenId last_prompt_token, std::uint64_t key,
                       double gamma, std::size_t vocab_size,
                       double alpha_target) {
  const GreenCount counts =
      count_green(body, last_prompt_token, key, gamma, vocab_size);
  const std::size_t trials = body.size();
  const Threshold thr =
      threshold_for_alpha(trials, gamma, vocab_size, alpha_target);

  DetectionReport report;
  report.n_green = counts.n_green;
  report.length = trials;
  report.n_star = thr.n_star;
  report.alpha_star = thr.alpha_star;
  report.gamma_eff = effective_gamma(gamma, vocab_size);
  report.p_value = binomial_tail(counts.n_green, trials, report.gamma_eff);
  report.reject_null = counts.n_green >= thr.n_star;
  return report;
}

}  // namespace wmark
