#ifndef WORDNICHE_COUNTING_HPP
#define WORDNICHE_COUNTING_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wordniche/windows.hpp"

namespace wordniche {

struct EntityCount {
  std::uint32_t entity = 0;  ///< local index
  std::uint64_t count = 0;
};

/// Row-compressed sparse table: row r holds (column, count) sorted by column.
struct SparseCounts {
  std::vector<std::size_t> offsets{0};
  std::vector<EntityCount> entries;

  [[nodiscard]] std::span<const EntityCount> row(std::size_t r) const {
    return std::span<const EntityCount>(entries).subspan(offsets[r], offsets[r + 1] - offsets[r]);
  }
  [[nodiscard]] std::size_t rows() const { return offsets.size() - 1; }
};

/// Every count table of one window. Words, users and threads are renumbered
/// into dense local indices ordered by global id; only entities contributing at
/// least one token appear.
struct WindowCounts {
  std::uint64_t total_tokens = 0;  ///< N_A

  std::vector<WordId> words;      ///< local -> global
  std::vector<EntityId> users;    ///< local -> global
  std::vector<EntityId> threads;  ///< local -> global

  std::vector<std::uint64_t> word_counts;    ///< N_w
  std::vector<std::uint64_t> user_tokens;    ///< m_i
  std::vector<std::uint64_t> thread_tokens;  ///< tokens per thread

  SparseCounts word_users;    ///< word -> (user, n_{w,i})
  SparseCounts word_threads;  ///< word -> (thread, n_{w,t})
  SparseCounts thread_users;  ///< thread -> (user, m_{i,t})
  SparseCounts user_threads;  ///< user -> (thread, m_{i,t})

  [[nodiscard]] std::size_t num_words() const { return words.size(); }
  [[nodiscard]] std::size_t num_users() const { return users.size(); }
  [[nodiscard]] std::size_t num_threads() const { return threads.size(); }

  /// U_w for a local word.
  [[nodiscard]] std::size_t distinct_users(std::size_t w) const { return word_users.row(w).size(); }
  /// T_w for a local word.
  [[nodiscard]] std::size_t distinct_threads(std::size_t w) const { return word_threads.row(w).size(); }

  [[nodiscard]] std::optional<std::size_t> local_word(WordId global) const {
    auto it = std::lower_bound(words.begin(), words.end(), global);
    if (it == words.end() || *it != global) return std::nullopt;
    return static_cast<std::size_t>(it - words.begin());
  }
};

namespace detail {

inline std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::uint32_t local_of(const std::vector<std::uint32_t>& sorted, std::uint32_t global) {
  return static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), global) - sorted.begin());
}

inline std::uint64_t pack(std::uint32_t hi, std::uint32_t lo) { return (std::uint64_t{hi} << 32) | lo; }

inline SparseCounts tally(std::vector<std::uint64_t> keys, std::size_t rows) {
  std::sort(keys.begin(), keys.end());
  SparseCounts out;
  out.offsets.assign(rows + 1, 0);
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    out.entries.push_back({static_cast<std::uint32_t>(keys[i] & 0xffffffffULL), j - i});
    ++out.offsets[(keys[i] >> 32) + 1];
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) out.offsets[r + 1] += out.offsets[r];
  return out;
}

inline SparseCounts tally_weighted(std::span<const std::uint64_t> keys, std::span<const std::uint64_t> weights,
                                   std::size_t rows) {
  std::vector<std::size_t> order(keys.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  SparseCounts out;
  out.offsets.assign(rows + 1, 0);
  for (std::size_t i = 0; i < order.size();) {
    const auto key = keys[order[i]];
    std::uint64_t total = 0;
    std::size_t j = i;
    for (; j < order.size() && keys[order[j]] == key; ++j) total += weights[order[j]];
    out.entries.push_back({static_cast<std::uint32_t>(key & 0xffffffffULL), total});
    ++out.offsets[(key >> 32) + 1];
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) out.offsets[r + 1] += out.offsets[r];
  return out;
}

}  // namespace detail

inline WindowCounts build_counts(const WindowSlice& slice) {
  WindowCounts c;
  std::vector<std::uint32_t> gw, gu, gt;
  for (const auto& p : slice.posts) {
    if (p.tokens.empty()) continue;
    gu.push_back(p.user);
    gt.push_back(p.thread);
    gw.insert(gw.end(), p.tokens.begin(), p.tokens.end());
  }
  c.words = detail::sorted_unique(std::move(gw));
  c.users = detail::sorted_unique(std::move(gu));
  c.threads = detail::sorted_unique(std::move(gt));
  c.word_counts.assign(c.words.size(), 0);
  c.user_tokens.assign(c.users.size(), 0);
  c.thread_tokens.assign(c.threads.size(), 0);

  std::vector<std::uint64_t> wu, wt, tu, tuw;
  for (const auto& p : slice.posts) {
    if (p.tokens.empty()) continue;
    const auto u = detail::local_of(c.users, p.user);
    const auto t = detail::local_of(c.threads, p.thread);
    const auto len = p.tokens.size();
    c.total_tokens += len;
    c.user_tokens[u] += len;
    c.thread_tokens[t] += len;
    tu.push_back(detail::pack(t, u));
    tuw.push_back(len);
    for (WordId g : p.tokens) {
      const auto w = detail::local_of(c.words, g);
      ++c.word_counts[w];
      wu.push_back(detail::pack(w, u));
      wt.push_back(detail::pack(w, t));
    }
  }
  c.word_users = detail::tally(std::move(wu), c.words.size());
  c.word_threads = detail::tally(std::move(wt), c.words.size());
  std::vector<std::uint64_t> ut(tu.size());
  for (std::size_t k = 0; k < tu.size(); ++k) ut[k] = detail::pack(static_cast<std::uint32_t>(tu[k] & 0xffffffffULL),
                                                                  static_cast<std::uint32_t>(tu[k] >> 32));
  c.thread_users = detail::tally_weighted(tu, tuw, c.threads.size());
  c.user_threads = detail::tally_weighted(ut, tuw, c.users.size());
  return c;
}

/// f = N_w / N_A for a global word id; 0 for words absent from the window.
inline double frequency(const WindowCounts& c, WordId word) {
  if (c.total_tokens == 0) throw Error("empty window");
  auto w = c.local_word(word);
  if (!w) return 0.0;
  return static_cast<double>(c.word_counts[*w]) / static_cast<double>(c.total_tokens);
}

/// Checks every conservation identity; returns a description of the first violation.
inline std::optional<std::string> conservation_violation(const WindowCounts& c) {
  auto sum = [](const std::vector<std::uint64_t>& v) {
    std::uint64_t s = 0;
    for (auto x : v) s += x;
    return s;
  };
  if (sum(c.word_counts) != c.total_tokens) return "sum N_w != N_A";
  if (sum(c.user_tokens) != c.total_tokens) return "sum m_i != N_A";
  if (sum(c.thread_tokens) != c.total_tokens) return "sum thread tokens != N_A";
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    std::uint64_t su = 0, st = 0;
    for (auto e : c.word_users.row(w)) su += e.count;
    for (auto e : c.word_threads.row(w)) st += e.count;
    if (su != c.word_counts[w] || st != c.word_counts[w]) return "per-word counts do not sum to N_w";
    auto nw = c.word_counts[w];
    if (c.distinct_users(w) > std::min<std::uint64_t>(nw, c.num_users())) return "U_w exceeds bound";
    if (c.distinct_threads(w) > std::min<std::uint64_t>(nw, c.num_threads())) return "T_w exceeds bound";
  }
  for (std::size_t i = 0; i < c.num_users(); ++i) {
    std::uint64_t s = 0;
    for (auto e : c.user_threads.row(i)) s += e.count;
    if (s != c.user_tokens[i]) return "sum_t m_{i,t} != m_i";
  }
  for (std::size_t t = 0; t < c.num_threads(); ++t) {
    std::uint64_t s = 0;
    for (auto e : c.thread_users.row(t)) s += e.count;
    if (s != c.thread_tokens[t]) return "sum_i m_{i,t} != thread tokens";
  }
  return std::nullopt;
}

}  // namespace wordniche

#endif
