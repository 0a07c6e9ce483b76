#include "wmark/lm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "wmark/errors.hpp"

using namespace wmark;

namespace {

std::vector<std::vector<TokenId>> one_doc(std::vector<TokenId> tokens) {
  return {std::move(tokens)};
}

}  // namespace

TEST_CASE("bigram counts match direct tallying") {
  // corpus "a b a b" with a=1, b=2
  const auto model = train_ngram(one_doc({1, 2, 1, 2}), 2, 1.0, 3);
  CHECK(model.context_count(std::vector<TokenId>{1}, 2) == 2);
  CHECK(model.context_count(std::vector<TokenId>{2}, 1) == 1);
  CHECK(model.context_count(std::vector<TokenId>{2}, 2) == 0);
}

TEST_CASE("add-k smoothing gives the hand-computed pmf") {
  // N=2, context (0) counts {v0: 3, v1: 1}, k=1 -> (4/6, 2/6)
  NgramModel m(2, 1.0, 2);
  m.add_document(std::vector<TokenId>{0, 0, 0, 0, 1});
  const Pmf pmf = m.next_pmf(std::vector<TokenId>{0});
  CHECK(pmf[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(pmf[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("unseen contexts give the uniform pmf") {
  const auto model = train_ngram(one_doc({1, 2, 1}), 3, 0.5, 4);
  const Pmf pmf = model.next_pmf(std::vector<TokenId>{3, 3});
  for (double p : pmf) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("every pmf sums to one with positive entries") {
  const auto model = train_ngram(
      one_doc({1, 2, 3, 1, 2, 1, 3, 3, 2, 1, 2, 3, 1, 1}), 3, 0.1, 5);
  for (TokenId a = 0; a < 5; ++a) {
    for (TokenId b = 0; b < 5; ++b) {
      const Pmf pmf = model.next_pmf(std::vector<TokenId>{a, b});
      double sum = 0.0;
      for (double p : pmf) {
        CHECK(p > 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("short contexts are left-padded with the sentinel") {
  const auto model = train_ngram(one_doc({0, 0, 2, 1, 2}), 3, 0.1, 4);
  const Pmf padded = model.next_pmf(std::vector<TokenId>{2});
  const Pmf explicit_ctx = model.next_pmf(std::vector<TokenId>{0, 2});
  for (std::size_t v = 0; v < 4; ++v) CHECK(padded[v] == explicit_ctx[v]);
  // Only the last order-1 tokens matter.
  const Pmf longer = model.next_pmf(std::vector<TokenId>{3, 3, 3, 0, 2});
  for (std::size_t v = 0; v < 4; ++v) CHECK(longer[v] == explicit_ctx[v]);
}

TEST_CASE("training rejects corpora shorter than the order") {
  CHECK_THROWS_AS(train_ngram(one_doc({1}), 2, 1.0, 3), DataError);
  CHECK_THROWS_AS(train_ngram({}, 2, 1.0, 3), DataError);
}

TEST_CASE("invalid model parameters are rejected") {
  CHECK_THROWS_AS(NgramModel(0, 1.0, 3), InvariantError);
  CHECK_THROWS_AS(NgramModel(2, 0.0, 3), InvariantError);
  CHECK_THROWS_AS(NgramModel(2, 1.0, 1), InvariantError);
}

TEST_CASE("model save and load round-trips every context pmf") {
  const auto model = train_ngram(
      one_doc({1, 2, 3, 1, 2, 1, 3, 3, 2, 1, 2, 3, 1, 1, 0, 2}), 3, 0.1, 4);
  std::stringstream file;
  model.save(file);
  const auto loaded = NgramModel::load(file);
  CHECK(loaded.order() == model.order());
  CHECK(loaded.smoothing_k() == model.smoothing_k());
  CHECK(loaded.vocab_size() == model.vocab_size());
  for (TokenId a = 0; a < 4; ++a)
    for (TokenId b = 0; b < 4; ++b) {
      const Pmf p1 = model.next_pmf(std::vector<TokenId>{a, b});
      const Pmf p2 = loaded.next_pmf(std::vector<TokenId>{a, b});
      for (std::size_t v = 0; v < 4; ++v) CHECK(p1[v] == p2[v]);
    }
}

TEST_CASE("model serialization is deterministic") {
  const auto model = train_ngram(
      one_doc({3, 1, 2, 3, 1, 3, 2, 2, 1, 3}), 2, 0.25, 4);
  std::ostringstream a, b;
  model.save(a);
  model.save(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("zipf masses follow the rank law") {
  const Pmf uniform = zipf_pmf(0.0, 5);
  for (double p : uniform) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));

  const Pmf z = zipf_pmf(1.0, 3);
  CHECK(z[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-12));
  CHECK(z[2] == doctest::Approx(2.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("seeded zipf pmf permutes the rank masses") {
  const Pmf base = zipf_pmf(1.2, 16);
  const Pmf permuted = synth_pmf_zipf(99, 16, 1.2);
  const Pmf again = synth_pmf_zipf(99, 16, 1.2);
  CHECK(permuted == again);

  Pmf sorted_base = base, sorted_perm = permuted;
  std::sort(sorted_base.begin(), sorted_base.end());
  std::sort(sorted_perm.begin(), sorted_perm.end());
  for (std::size_t i = 0; i < 16; ++i)
    CHECK(sorted_base[i] == sorted_perm[i]);

  const Pmf other = synth_pmf_zipf(100, 16, 1.2);
  CHECK(permuted != other);
}

TEST_CASE("invalid shape parameters are rejected") {
  CHECK_THROWS_AS(zipf_pmf(-0.5, 4), DataError);
  CHECK_THROWS_AS(zipf_pmf(1.0, 1), DataError);
  CHECK_THROWS_AS(synth_pmf_dirichlet(1, 4, 0.0), DataError);
  CHECK_THROWS_AS(synth_pmf_dirichlet(1, 4, -1.0), DataError);
}

TEST_CASE("dirichlet draws are valid, deterministic pmfs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (double alpha : {0.4, 1.0, 3.0}) {
      const Pmf pmf = synth_pmf_dirichlet(seed, 8, alpha);
      double sum = 0.0;
      for (double p : pmf) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(pmf == synth_pmf_dirichlet(seed, 8, alpha));
    }
  }
}

TEST_CASE("dirichlet moments match theory") {
  // Symmetric Dirichlet(alpha) on n entries: E[p_i] = 1/n and
  // Var[p_i] = (1/n)(1 - 1/n) / (n alpha + 1). Checks the gamma sampler.
  const std::size_t n = 8;
  const double alpha = 0.7;
  const std::size_t draws = 4000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t seed = 0; seed < draws; ++seed) {
    const Pmf pmf = synth_pmf_dirichlet(seed, n, alpha);
    for (double p : pmf) {
      sum += p;
      sum_sq += p * p;
    }
  }
  const double count = static_cast<double>(draws * n);
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  const double expect_mean = 1.0 / static_cast<double>(n);
  const double expect_var =
      expect_mean * (1.0 - expect_mean) / (static_cast<double>(n) * alpha + 1.0);
  CHECK(mean == doctest::Approx(expect_mean).epsilon(1e-6));
  CHECK(var == doctest::Approx(expect_var).epsilon(0.08));
}
