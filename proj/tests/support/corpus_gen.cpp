#include "corpus_gen.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "wmark/rng.hpp"

namespace wmark::testsupport {

namespace {

using wmark::SplitMix64;
using wmark::mix64;
using wmark::mix_pair;

std::vector<std::string> make_words(std::uint64_t seed, std::size_t count) {
  static const char* onsets[] = {
      "b",  "d",  "f",  "g",  "h",  "j",  "k",  "l",  "m",  "n",  "p",
      "r",  "s",  "t",  "v",  "w",  "z",  "bl", "br", "ch", "cl", "cr",
      "dr", "fl", "fr", "gl", "gr", "pl", "pr", "sh", "sk", "sl", "sm",
      "sn", "sp", "st", "sw", "th", "tr", "tw"};
  static const char* vowels[] = {"a",  "e",  "i",  "o",  "u",
                                 "ai", "ea", "ee", "oo", "ou"};
  static const char* codas[] = {"",   "n",  "r",  "s",  "t",  "l", "m",
                                "p",  "k",  "nd", "nt", "rs", "st"};

  std::vector<std::string> all;
  for (const char* o : onsets)
    for (const char* v : vowels)
      for (const char* c : codas) all.push_back(std::string(o) + v + c);

  SplitMix64 rng(mix_pair(seed, 0x776F726473ull));  // "words"
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(
                            static_cast<std::uint64_t>(all.size() - i)));
    std::swap(all[i], all[j]);
  }
  if (count > all.size()) count = all.size();
  all.resize(count);
  return all;
}

}  // namespace

std::string make_corpus(std::uint64_t seed, std::size_t doc_count) {
  const std::size_t n_words = 2400;
  const std::vector<std::string> words = make_words(seed, n_words);

  // Shared Zipf rank tables at 16 concentration levels; each word's
  // successors follow one of them under a word-specific affine rank map.
  const std::size_t n_levels = 16;
  std::vector<std::vector<double>> cumulative(n_levels);
  for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
    const double s =
        0.3 + 1.3 * static_cast<double>(lvl) / static_cast<double>(n_levels - 1);
    std::vector<double>& cum = cumulative[lvl];
    cum.resize(n_words);
    double total = 0.0;
    for (std::size_t r = 0; r < n_words; ++r) {
      total += std::pow(static_cast<double>(r + 1), -s);
      cum[r] = total;
    }
    for (double& c : cum) c /= total;
  }

  struct WordRule {
    std::size_t level;
    std::size_t stride;  // odd, coprime with 2^k part; offset completes an
    std::size_t offset;  // affine bijection on ranks
  };
  std::vector<WordRule> rules(n_words);
  for (std::size_t w = 0; w < n_words; ++w) {
    SplitMix64 wrng(mix_pair(seed, 0x72756C65ull + w));  // "rule" + w
    rules[w].level = static_cast<std::size_t>(wrng.bounded(n_levels));
    std::size_t stride;
    do {
      stride = static_cast<std::size_t>(wrng.bounded(n_words));
    } while (std::gcd(stride, n_words) != 1);
    rules[w].stride = stride;
    rules[w].offset = static_cast<std::size_t>(wrng.bounded(n_words));
  }

  SplitMix64 rng(mix_pair(seed, 0x646F6373ull));  // "docs"
  std::string out;
  out.reserve(doc_count * 1400);
  for (std::size_t d = 0; d < doc_count; ++d) {
    const std::size_t len = 40 + static_cast<std::size_t>(rng.bounded(361));
    std::size_t word = static_cast<std::size_t>(rng.bounded(n_words));
    std::size_t line_words = 0;
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) {
        out.push_back(line_words == 12 ? '\n' : ' ');
        if (line_words == 12) line_words = 0;
      }
      out += words[word];
      ++line_words;

      const WordRule& rule = rules[word];
      const std::vector<double>& cum = cumulative[rule.level];
      const double u = rng.next_unit();
      std::size_t lo = 0, hi = n_words - 1;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cum[mid] > u)
          hi = mid;
        else
          lo = mid + 1;
      }
      word = (rule.offset + lo * rule.stride) % n_words;
    }
    out.push_back('\n');
    if (d + 1 < doc_count) out.push_back('\n');
  }
  return out;
}

}  // namespace wmark::testsupport
