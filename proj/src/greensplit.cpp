#include "wmark/greensplit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmark/errors.hpp"
#include "wmark/rng.hpp"

namespace wmark {

std::size_t green_list_size(double gamma, std::size_t vocab_size) {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw InvariantError("gamma must lie strictly inside (0, 1)");
  if (vocab_size < 2) throw InvariantError("vocab_size must be >= 2");
  auto m = static_cast<std::size_t>(
      std::floor(gamma * static_cast<double>(vocab_size)));
  if (m == 0 || m >= vocab_size)
    throw InvariantError("degenerate split: a list would be empty");
  return m;
}

double effective_gamma(double gamma, std::size_t vocab_size) {
  return static_cast<double>(green_list_size(gamma, vocab_size)) /
         static_cast<double>(vocab_size);
}

GreenMask split(std::uint64_t key, TokenId prev, double gamma,
                std::size_t vocab_size) {
  const std::size_t m = green_list_size(gamma, vocab_size);

  SplitMix64 rng(mix_pair(key, prev));
  std::vector<TokenId> ids(vocab_size);
  std::iota(ids.begin(), ids.end(), TokenId{0});

  // Partial Fisher-Yates: after m swaps the prefix is a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(
                            rng.bounded(static_cast<std::uint64_t>(
                                vocab_size - i)));
    std::swap(ids[i], ids[j]);
  }

  GreenMask mask;
  mask.members.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(mask.members.begin(), mask.members.end());
  mask.bits.assign(vocab_size, false);
  for (TokenId id : mask.members) mask.bits[id] = true;
  return mask;
}

bool is_green(std::uint64_t key, TokenId prev, TokenId token, double gamma,
              std::size_t vocab_size) {
  if (token >= vocab_size) throw InvariantError("token id out of range");
  return split(key, prev, gamma, vocab_size).contains(token);
}

}  // namespace wmark
