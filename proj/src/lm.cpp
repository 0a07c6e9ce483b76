#include "wmark/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wmark/errors.hpp"
#include "wmark/rng.hpp"

namespace wmark {

namespace {

double normal_draw(SplitMix64& rng) {
  double u1 = rng.next_unit_open();
  double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Marsaglia-Tsang squeeze; the alpha < 1 case boosts to alpha + 1 and
// multiplies by U^(1/alpha).
double gamma_draw(SplitMix64& rng, double alpha) {
  if (alpha < 1.0) {
    double boost = std::pow(rng.next_unit_open(), 1.0 / alpha);
    return gamma_draw(rng, alpha + 1.0) * boost;
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal_draw(rng);
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = rng.next_unit_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

NgramModel::NgramModel(std::size_t order, double smoothing_k,
                       std::size_t vocab_size)
    : order_(order), smoothing_k_(smoothing_k), vocab_size_(vocab_size) {
  if (order_ < 1) throw InvariantError("ngram order must be >= 1");
  if (!(smoothing_k_ > 0.0))
    throw InvariantError("smoothing k must be positive");
  if (vocab_size_ < 2) throw InvariantError("vocab_size must be >= 2");
}

std::string NgramModel::context_key(std::span<const TokenId> context) const {
  const std::size_t len = order_ - 1;
  std::string key(len * sizeof(TokenId), '\0');
  // Left-pad with the sentinel id when the context is short.
  std::size_t skip = len > context.size() ? len - context.size() : 0;
  std::size_t from = context.size() > len ? context.size() - len : 0;
  for (std::size_t i = skip; i < len; ++i) {
    TokenId id = context[from + (i - skip)];
    std::memcpy(key.data() + i * sizeof(TokenId), &id, sizeof(TokenId));
  }
  return key;
}

void NgramModel::add_document(std::span<const TokenId> tokens) {
  if (tokens.size() < order_) return;
  for (std::size_t i = 0; i + order_ <= tokens.size(); ++i) {
    auto context = tokens.subspan(i, order_ - 1);
    TokenId token = tokens[i + order_ - 1];
    if (token >= vocab_size_)
      throw DataError("token id out of vocabulary range");
    for (TokenId c : context)
      if (c >= vocab_size_)
        throw DataError("token id out of vocabulary range");
    Row& row = rows_[context_key(context)];
    ++row.total;
    ++row.counts[token];
  }
}

void NgramModel::next_pmf(std::span<const TokenId> context, Pmf& out) const {
  out.resize(vocab_size_);
  auto it = rows_.find(context_key(context));
  const double total = it == rows_.end()
                           ? 0.0
                           : static_cast<double>(it->second.total);
  const double denom =
      total + smoothing_k_ * static_cast<double>(vocab_size_);
  std::fill(out.begin(), out.end(), smoothing_k_ / denom);
  if (it != rows_.end())
    for (const auto& [token, count] : it->second.counts)
      out[token] += static_cast<double>(count) / denom;
}

std::uint64_t NgramModel::context_count(std::span<const TokenId> context,
                                        TokenId token) const {
  auto it = rows_.find(context_key(context));
  if (it == rows_.end()) return 0;
  auto jt = it->second.counts.find(token);
  return jt == it->second.counts.end() ? 0 : jt->second;
}

void NgramModel::save(std::ostream& out) const {
  char kbuf[32];
  std::snprintf(kbuf, sizeof(kbuf), "%.17g", smoothing_k_);
  out << "ngram-counts 1\n";
  out << "order " << order_ << '\n';
  out << "k " << kbuf << '\n';
  out << "vocab " << vocab_size_ << '\n';

  struct Entry {
    std::vector<TokenId> context;
    TokenId token;
    std::uint64_t count;
  };
  std::vector<Entry> entries;
  for (const auto& [key, row] : rows_) {
    std::vector<TokenId> context(order_ - 1);
    for (std::size_t i = 0; i < context.size(); ++i)
      std::memcpy(&context[i], key.data() + i * sizeof(TokenId),
                  sizeof(TokenId));
    for (const auto& [token, count] : row.counts)
      entries.push_back({context, token, count});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.context != b.context) return a.context < b.context;
    return a.token < b.token;
  });

  out << "rows " << entries.size() << '\n';
  for (const Entry& e : entries) {
    for (TokenId c : e.context) out << c << ' ';
    out << e.token << ' ' << e.count << '\n';
  }
}

NgramModel NgramModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "ngram-counts" || version != 1)
    throw DataError("unrecognized model file header");

  std::string field;
  std::size_t order = 0, vocab = 0, row_count = 0;
  std::string k_text;
  if (!(in >> field >> order) || field != "order")
    throw DataError("model file: missing order");
  if (!(in >> field >> k_text) || field != "k")
    throw DataError("model file: missing k");
  if (!(in >> field >> vocab) || field != "vocab")
    throw DataError("model file: missing vocab");
  if (!(in >> field >> row_count) || field != "rows")
    throw DataError("model file: missing rows");

  double k = std::strtod(k_text.c_str(), nullptr);
  NgramModel model(order, k, vocab);
  std::vector<TokenId> window(order);
  for (std::size_t r = 0; r < row_count; ++r) {
    for (std::size_t i = 0; i < order; ++i)
      if (!(in >> window[i])) throw DataError("model file: truncated row");
    std::uint64_t count = 0;
    if (!(in >> count)) throw DataError("model file: truncated row");
    auto context = std::span<const TokenId>(window).first(order - 1);
    Row& row = model.rows_[model.context_key(context)];
    row.total += count;
    row.counts[window[order - 1]] += count;
  }
  return model;
}

NgramModel train_ngram(std::span<const std::vector<TokenId>> documents,
                       std::size_t order, double smoothing_k,
                       std::size_t vocab_size) {
  std::size_t total = 0;
  for (const auto& doc : documents) total += doc.size();
  if (total < order) throw DataError("corpus shorter than the ngram order");
  NgramModel model(order, smoothing_k, vocab_size);
  for (const auto& doc : documents) model.add_document(doc);
  return model;
}

Pmf zipf_pmf(double s, std::size_t n) {
  if (n < 2) throw DataError("pmf needs at least 2 entries");
  if (!(s >= 0.0) || !std::isfinite(s))
    throw DataError("zipf exponent must be a finite non-negative real");
  Pmf pmf(n);
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    pmf[r] = std::pow(static_cast<double>(r + 1), -s);
    sum += pmf[r];
  }
  for (double& p : pmf) p /= sum;
  return pmf;
}

Pmf synth_pmf_zipf(std::uint64_t seed, std::size_t n, double s) {
  Pmf ranks = zipf_pmf(s, n);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(
                            rng.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[i], perm[j]);
  }
  Pmf pmf(n);
  for (std::size_t r = 0; r < n; ++r) pmf[perm[r]] = ranks[r];
  return pmf;
}

Pmf synth_pmf_dirichlet(std::uint64_t seed, std::size_t n, double alpha) {
  if (n < 2) throw DataError("pmf needs at least 2 entries");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DataError("dirichlet alpha must be a finite positive real");
  SplitMix64 rng(seed);
  Pmf pmf(n);
  double sum = 0.0;
  for (double& p : pmf) {
    p = gamma_draw(rng, alpha);
    sum += p;
  }
  if (!(sum > 0.0)) throw InvariantError("degenerate dirichlet draw");
  for (double& p : pmf) p /= sum;
  return pmf;
}

}  // namespace wmark
