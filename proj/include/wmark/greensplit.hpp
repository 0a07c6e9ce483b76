#pragma once

// Keyed pseudo-random partition of the vocabulary into a green list and its
// red complement. The partition is a pure function of (key, previous token),
// so a generator and a detector that share the key reconstruct identical
// lists without communicating.

#include <cstdint>
#include <vector>

#include "wmark/vocab.hpp"

namespace wmark {

// Green list for one generation step.
//
// `members` is sorted ascending. `bits` is a per-token membership bitmap so
// callers scanning the whole pmf can test membership in O(1).
struct GreenMask {
  std::vector<TokenId> members;
  std::vector<bool> bits;

  bool contains(TokenId id) const {
    return id < bits.size() && bits[id];
  }
  std::size_t size() const { return members.size(); }
};

// Number of green tokens for fraction `gamma` over `vocab_size` tokens:
// floor(gamma * vocab_size), computed in double precision. Throws
// InvariantError when the result would leave either list empty, since a
// one-sided split supports no watermark and no detector null.
std::size_t green_list_size(double gamma, std::size_t vocab_size);

// The fraction the detector must use as its null: green_list_size / N.
// Differs from `gamma` whenever gamma * N is not an integer.
double effective_gamma(double gamma, std::size_t vocab_size);

// Pseudo-random green list for the step following `prev`. Deterministic in
// (key, prev, gamma, vocab_size); bit-exact across platforms.
GreenMask split(std::uint64_t key, TokenId prev, double gamma,
                std::size_t vocab_size);

// Membership test, bit-exact with split(). Materializes the mask, so
// callers testing many tokens per step should reuse one GreenMask instead.
bool is_green(std::uint64_t key, TokenId prev, TokenId token, double gamma,
              std::size_t vocab_size);

}  // namespace wmark
