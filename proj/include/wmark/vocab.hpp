#pragma once

/**
 * Token universe shared by generation, detection and LM training.
 *
 * Tokens are dense indices into an ordered list of surface strings. Index 0
 * is the reserved sentinel: it stands in for out-of-vocabulary words and
 * doubles as the BOS padding token. The tokenizer is plain whitespace
 * splitting; the rest of the pipeline only ever sees token ids.
 */

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wmark {

using TokenId = std::uint32_t;

/// Reserved id for out-of-vocabulary words; also used as BOS padding.
inline constexpr TokenId kUnknownId = 0;
inline constexpr const char* kUnknownSurface = "<unk>";

class Vocabulary {
 public:
  /// Builds a vocabulary of the (max_size - 1) most frequent whitespace
  /// tokens in the corpus, plus the sentinel at index 0. Frequency ties
  /// break by first occurrence, so identical corpus bytes give identical
  /// vocabularies.
  static Vocabulary build(std::istream& corpus, std::size_t max_size);

  /// Wraps an explicit entry list. entries[0] must be the sentinel.
  static Vocabulary from_entries(std::vector<std::string> entries);

  std::size_t size() const { return entries_.size(); }
  const std::string& surface(TokenId id) const { return entries_.at(id); }
  std::optional<TokenId> find(std::string_view word) const;

  /// Whitespace-delimited tokenization; unseen words map to the sentinel.
  std::vector<TokenId> tokenize(std::string_view text) const;

  /// Inverse of tokenize up to whitespace normalization.
  std::string detokenize(std::span<const TokenId> ids) const;

  /// Line-oriented format: one surface string per line, line number = id,
  /// first line is the sentinel.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  Vocabulary() = default;
  void rebuild_index();

  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId, std::hash<std::string>,
                     std::equal_to<>>
      index_;
};

/// A prompt plus the generated/observed body it conditions.
struct TokenSequence {
  std::vector<TokenId> prompt;
  std::vector<TokenId> body;
};

}  // namespace wmark
