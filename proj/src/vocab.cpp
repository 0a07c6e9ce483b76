#include "wmark/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "wmark/errors.hpp"

namespace wmark {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

}  // namespace

Vocabulary Vocabulary::build(std::istream& corpus, std::size_t max_size) {
  if (max_size < 2) throw InvariantError("vocabulary max_size must be >= 2");

  struct Stat {
    std::uint64_t count = 0;
    std::uint64_t first_seen = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::uint64_t position = 0;

  std::string line;
  while (std::getline(corpus, line)) {
    for_each_word(line, [&](std::string_view word) {
      if (word == kUnknownSurface) return;  // reserved surface form
      auto [it, inserted] = stats.try_emplace(std::string(word));
      if (inserted) it->second.first_seen = position;
      ++it->second.count;
      ++position;
    });
  }
  if (position == 0) throw DataError("empty corpus");

  std::vector<const std::pair<const std::string, Stat>*> ranked;
  ranked.reserve(stats.size());
  for (const auto& entry : stats) ranked.push_back(&entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->second.count != b->second.count)
      return a->second.count > b->second.count;
    return a->second.first_seen < b->second.first_seen;
  });

  std::vector<std::string> entries;
  entries.reserve(std::min(max_size, ranked.size() + 1));
  entries.emplace_back(kUnknownSurface);
  for (const auto* entry : ranked) {
    if (entries.size() >= max_size) break;
    entries.push_back(entry->first);
  }
  return from_entries(std::move(entries));
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
  if (entries.size() < 2) throw InvariantError("vocabulary needs N >= 2");
  if (entries.front() != kUnknownSurface)
    throw InvariantError("entry 0 must be the sentinel");
  Vocabulary v;
  v.entries_ = std::move(entries);
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(entries_.size());
  for (TokenId id = 0; id < entries_.size(); ++id) {
    auto [it, inserted] = index_.emplace(entries_[id], id);
    if (!inserted) throw DataError("duplicate vocabulary entry: " + entries_[id]);
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  for_each_word(text, [&](std::string_view word) {
    auto it = index_.find(std::string(word));
    out.push_back(it == index_.end() ? kUnknownId : it->second);
  });
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += surface(ids[i]);
  }
  return out;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& entry : entries_) out << entry << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError("vocabulary file has an empty line");
    for (char c : line)
      if (is_space(c)) throw DataError("vocabulary entry contains whitespace");
    entries.push_back(line);
  }
  if (entries.empty()) throw DataError("empty vocabulary file");
  if (entries.front() != kUnknownSurface)
    throw DataError("vocabulary file must start with the sentinel entry");
  return from_entries(std::move(entries));
}

}  // namespace wmark
