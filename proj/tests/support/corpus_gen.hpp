#pragma once

// Deterministic synthetic corpus for tests and demos: documents of
// pronounceable nonsense words drawn from per-word Markov transitions whose
// concentration varies word to word, so a trained n-gram model produces
// next-token distributions spanning low to high entropy.

#include <cstdint>
#include <string>

namespace wmark::testsupport {

// Blank-line separated documents, 40 to 400 words each. Identical
// (seed, doc_count) pairs produce identical bytes.
std::string make_corpus(std::uint64_t seed, std::size_t doc_count);

}  // namespace wmark::testsupport
