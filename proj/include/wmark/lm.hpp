#pragma once

// Next-token distribution providers. The watermark layer is a pure pmf
// transform, so the model interface is pull-based: context in, pmf out.
// Two providers: an add-k smoothed n-gram model (trainable, full support)
// and seeded synthetic pmfs for controlled property tests.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wmark/vocab.hpp"

namespace wmark {

// Probability vector over the vocabulary: entries >= 0, sum 1 within 1e-12.
using Pmf = std::vector<double>;

class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;
  virtual std::size_t vocab_size() const = 0;
  // Fills `out` (resized to vocab_size) with P[next = v | context].
  virtual void next_pmf(std::span<const TokenId> context, Pmf& out) const = 0;

  Pmf next_pmf(std::span<const TokenId> context) const {
    Pmf out;
    next_pmf(context, out);
    return out;
  }
};

// Add-k smoothed n-gram model. `order` counts the predicted token, so the
// conditioning context is the last (order - 1) tokens; shorter contexts are
// left-padded with kUnknownId. Smoothing k > 0 keeps every entry positive,
// which downstream damage sums require (log p finite wherever p > 0).
class NgramModel : public NextTokenModel {
 public:
  NgramModel(std::size_t order, double smoothing_k, std::size_t vocab_size);

  std::size_t vocab_size() const override { return vocab_size_; }
  void next_pmf(std::span<const TokenId> context, Pmf& out) const override;
  using NextTokenModel::next_pmf;

  std::size_t order() const { return order_; }
  double smoothing_k() const { return smoothing_k_; }

  // Adds sliding windows of `order` tokens. Windows never cross document
  // boundaries; call once per document.
  void add_document(std::span<const TokenId> tokens);

  std::uint64_t context_count(std::span<const TokenId> context,
                              TokenId token) const;

  // Line-based text dump, sorted, so identical models serialize identically.
  void save(std::ostream& out) const;
  static NgramModel load(std::istream& in);

 private:
  struct Row {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> counts;
  };

  std::string context_key(std::span<const TokenId> context) const;

  std::size_t order_;
  double smoothing_k_;
  std::size_t vocab_size_;
  std::unordered_map<std::string, Row> rows_;
};

// Trains on blank-line delimited documents already tokenized by the caller.
// Throws DataError when the corpus holds fewer tokens than `order`.
NgramModel train_ngram(std::span<const std::vector<TokenId>> documents,
                       std::size_t order, double smoothing_k,
                       std::size_t vocab_size);

// Zipf masses in rank order: p(r) proportional to (r+1)^(-s), r = 0..n-1.
Pmf zipf_pmf(double s, std::size_t n);

// Seeded synthetic pmfs. zipfian: rank masses above assigned to token ids
// under a seeded permutation. dirichlet: symmetric Dirichlet(alpha) draw.
Pmf synth_pmf_zipf(std::uint64_t seed, std::size_t n, double s);
Pmf synth_pmf_dirichlet(std::uint64_t seed, std::size_t n, double alpha);

}  // namespace wmark
