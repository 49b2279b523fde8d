#ifndef WORDNICHE_WINDOWS_HPP
#define WORDNICHE_WINDOWS_HPP

#include <algorithm>
#include <chrono>
#include <optional>
#include <vector>

#include "wordniche/corpus.hpp"
#include "wordniche/tokenizer.hpp"

namespace wordniche {

struct TokenizedPost {
  std::uint32_t post = 0;  ///< index into TokenizedCorpus::post_ids
  EntityId user = 0;
  EntityId thread = 0;
  Timestamp timestamp{};
  std::vector<WordId> tokens;
};

/// Corpus with interned words, users and threads. Ids are global to the corpus.
struct TokenizedCorpus {
  Lexicon words;
  Lexicon users;
  Lexicon threads;
  std::vector<std::string> post_ids;
  std::vector<TokenizedPost> posts;
};

inline TokenizedCorpus tokenize_corpus(const Corpus& corpus, const TokenizerConfig& config = {}) {
  TokenizedCorpus tc;
  tc.post_ids.reserve(corpus.posts.size());
  tc.posts.reserve(corpus.posts.size());
  for (const auto& p : corpus.posts) {
    TokenizedPost tp;
    tp.post = static_cast<std::uint32_t>(tc.post_ids.size());
    tp.user = tc.users.intern(p.user_id);
    tp.thread = tc.threads.intern(p.thread_id);
    tp.timestamp = p.timestamp;
    for_each_token(p.body, config, [&](std::string_view t) { tp.tokens.push_back(tc.words.intern(t)); });
    tc.post_ids.push_back(p.post_id);
    tc.posts.push_back(std::move(tp));
  }
  return tc;
}

/// Half-open interval [start, end).
struct Window {
  std::size_t index = 0;
  Timestamp start{};
  Timestamp end{};
  Timestamp center{};
};

struct WindowSlice {
  Window window;
  std::vector<TokenizedPost> posts;  ///< sorted by timestamp
};

inline constexpr std::chrono::seconds kHalfYear = std::chrono::days{182};

/// Latest January 1 or July 1 (00:00 UTC) not after t.
inline Timestamp default_epoch(Timestamp t) {
  using namespace std::chrono;
  year_month_day ymd{floor<days>(t)};
  auto m = static_cast<unsigned>(ymd.month()) >= 7 ? July : January;
  return Timestamp{sys_days{ymd.year() / m / 1}};
}

inline Window make_window(std::size_t index, Timestamp epoch, std::chrono::seconds length) {
  Window w;
  w.index = index;
  w.start = epoch + length * static_cast<long>(index);
  w.end = w.start + length;
  w.center = w.start + length / 2;
  return w;
}

/// Assigns every post to exactly one window. Empty windows between the first
/// and the last post are kept.
inline std::vector<WindowSlice> partition_windows(const TokenizedCorpus& corpus,
                                                  std::chrono::seconds length = kHalfYear,
                                                  std::optional<Timestamp> epoch = std::nullopt) {
  if (corpus.posts.empty()) throw Error("no posts");
  if (length.count() <= 0) throw Error("window length must be positive");
  auto [lo, hi] = std::minmax_element(corpus.posts.begin(), corpus.posts.end(),
                                      [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  const Timestamp first = epoch.value_or(default_epoch(lo->timestamp));
  if (first > lo->timestamp) throw Error("epoch is after the earliest post");
  const auto count = static_cast<std::size_t>((hi->timestamp - first) / length) + 1;

  std::vector<WindowSlice> slices(count);
  for (std::size_t i = 0; i < count; ++i) slices[i].window = make_window(i, first, length);
  for (const auto& p : corpus.posts) {
    auto idx = static_cast<std::size_t>((p.timestamp - first) / length);
    slices[idx].posts.push_back(p);
  }
  for (auto& s : slices) {
    std::stable_sort(s.posts.begin(), s.posts.end(), [](const auto& a, const auto& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.post < b.post;
    });
  }
  return slices;
}

}  // namespace wordniche

#endif
