#ifndef WORDNICHE_TRIMMING_HPP
#define WORDNICHE_TRIMMING_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wordniche/dissemination.hpp"
#include "wordniche/null_models.hpp"
#include "wordniche/stats.hpp"

namespace wordniche {

struct TrimParams {
  std::size_t post_length = 0;  ///< L; see median_post_length for the usual choice
  std::size_t max_posts_per_entity = 10;
  std::uint64_t seed = 0;
  std::size_t max_balance_iterations = 1000000;
};

struct TrimReport {
  std::size_t posts_in = 0;
  std::size_t removed_short = 0;
  std::size_t removed_duplicate_pair = 0;
  std::size_t removed_cap = 0;
  std::size_t removed_balance = 0;
  std::size_t posts_out = 0;
  std::size_t users = 0;
  std::size_t threads = 0;
  double ks_distance = 0;  ///< posts per user vs posts per thread
  std::size_t iterations = 0;
  bool balanced = false;
};

struct TrimResult {
  WindowSlice slice;
  TrimReport report;
};

/// Median token count over non-empty posts of all slices.
inline std::size_t median_post_length(std::span<const WindowSlice> slices) {
  std::vector<double> lengths;
  for (const auto& s : slices)
    for (const auto& p : s.posts)
      if (!p.tokens.empty()) lengths.push_back(static_cast<double>(p.tokens.size()));
  if (lengths.empty()) throw Error("no non-empty posts");
  return static_cast<std::size_t>(stats::median(std::move(lengths)));
}

namespace detail {

/// Keeps at most cap posts per key, chosen uniformly; groups are visited in key order.
template <class Key>
std::size_t cap_posts(std::vector<TokenizedPost>& posts, std::size_t cap, Key key, std::mt19937_64& eng) {
  std::map<EntityId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < posts.size(); ++i) groups[key(posts[i])].push_back(i);
  std::vector<char> drop(posts.size(), 0);
  std::size_t removed = 0;
  for (auto& [id, members] : groups) {
    if (members.size() <= cap) continue;
    std::shuffle(members.begin(), members.end(), eng);
    for (std::size_t j = cap; j < members.size(); ++j) drop[members[j]] = 1;
    removed += members.size() - cap;
  }
  std::size_t k = 0;
  std::erase_if(posts, [&](const TokenizedPost&) { return drop[k++] != 0; });
  return removed;
}

inline std::vector<double> posts_per(const std::vector<TokenizedPost>& posts, bool by_user) {
  std::map<EntityId, double> n;
  for (const auto& p : posts) n[by_user ? p.user : p.thread] += 1;
  std::vector<double> out;
  for (auto [id, c] : n) out.push_back(c);
  return out;
}

}  // namespace detail

/// Four steps: fix post length at L (drop shorter, truncate longer); keep the
/// earliest post per (user, thread); cap posts per user and per thread at C;
/// drop random users or threads from the larger side until N_U = N_T.
inline TrimResult trim_window(const WindowSlice& slice, const TrimParams& params) {
  if (slice.posts.empty()) throw Error("trim_window: empty slice");
  if (params.post_length < 1) throw Error("trim_window: post length must be at least 1");
  if (params.max_posts_per_entity < 1) throw Error("trim_window: cap must be at least 1");

  TrimResult out;
  out.slice.window = slice.window;
  auto& rep = out.report;
  auto& posts = out.slice.posts;
  rep.posts_in = slice.posts.size();

  for (const auto& p : slice.posts) {
    if (p.tokens.size() < params.post_length) {
      ++rep.removed_short;
      continue;
    }
    posts.push_back(p);
    posts.back().tokens.resize(params.post_length);
  }

  std::set<std::pair<EntityId, EntityId>> seen;
  std::size_t before = posts.size();
  std::erase_if(posts, [&](const TokenizedPost& p) { return !seen.insert({p.user, p.thread}).second; });
  rep.removed_duplicate_pair = before - posts.size();

  std::mt19937_64 cap_eng(stream_seed(params.seed, 0));
  rep.removed_cap += detail::cap_posts(posts, params.max_posts_per_entity, [](auto& p) { return p.user; }, cap_eng);
  rep.removed_cap += detail::cap_posts(posts, params.max_posts_per_entity, [](auto& p) { return p.thread; }, cap_eng);

  std::mt19937_64 balance_eng(stream_seed(params.seed, 1));
  before = posts.size();
  for (;;) {
    std::set<EntityId> users, threads;
    for (const auto& p : posts) {
      users.insert(p.user);
      threads.insert(p.thread);
    }
    rep.users = users.size();
    rep.threads = threads.size();
    if (rep.users == rep.threads) {
      rep.balanced = true;
      break;
    }
    if (rep.iterations >= params.max_balance_iterations) break;
    ++rep.iterations;
    const bool drop_user = rep.users > rep.threads;
    const auto& side = drop_user ? users : threads;
    std::uniform_int_distribution<std::size_t> pick(0, side.size() - 1);
    const EntityId victim = *std::next(side.begin(), static_cast<std::ptrdiff_t>(pick(balance_eng)));
    std::erase_if(posts, [&](const TokenizedPost& p) { return (drop_user ? p.user : p.thread) == victim; });
  }
  rep.removed_balance = before - posts.size();
  rep.posts_out = posts.size();
  rep.ks_distance = stats::ks_distance(detail::posts_per(posts, true), detail::posts_per(posts, false));
  return out;
}

/// Returns a description of the first violated postcondition, if any.
inline std::optional<std::string> trim_violation(const WindowSlice& s, const TrimParams& params) {
  std::set<std::pair<EntityId, EntityId>> pairs;
  std::map<EntityId, std::size_t> per_user, per_thread;
  for (const auto& p : s.posts) {
    if (p.tokens.size() != params.post_length) return "post length " + std::to_string(p.tokens.size());
    if (!pairs.insert({p.user, p.thread}).second) return "two posts share a (user, thread) pair";
    if (++per_user[p.user] > params.max_posts_per_entity) return "user over the cap";
    if (++per_thread[p.thread] > params.max_posts_per_entity) return "thread over the cap";
  }
  if (per_user.size() != per_thread.size())
    return "N_U = " + std::to_string(per_user.size()) + " but N_T = " + std::to_string(per_thread.size());
  return std::nullopt;
}

// ---- statistics on trimmed windows -----------------------------------------

struct TrimmedWord {
  WordId word = 0;
  double d_user = 0;
  double d_thread = 0;
  double dhat_user = 0;
  double dhat_thread = 0;
};

/// Valid words of one window with exact global and conditional baselines.
inline std::vector<TrimmedWord> trimmed_words(const WindowCounts& c, std::uint64_t min_count = 6) {
  std::vector<TrimmedWord> out;
  if (c.total_tokens == 0) return out;
  auto hats = dhat_all(c, min_count);
  DisseminationModel model(c);
  MeasureOptions opts{Baseline::exact, min_count, 0.0};
  for (const auto& h : hats) {
    auto m = model.measure(*c.local_word(h.word), opts);
    out.push_back({h.word, m.d_user, m.d_thread, h.dhat_user, h.dhat_thread});
  }
  return out;
}

struct CorrelationPair {
  std::string name;
  std::vector<double> per_window;  ///< NaN where undefined
  double mean = 0;
  double sd = 0;
};

struct TrimmedCorrelations {
  std::vector<std::size_t> windows;  ///< indices of windows that were used
  std::vector<CorrelationPair> pairs;
};

/// Pearson r per window for (D-hat^U, D^U), (D-hat^T, D^T), (D^U, D^T) and
/// (D-hat^U, D-hat^T); mean and sample sd over windows.
inline TrimmedCorrelations trimmed_correlations(std::span<const std::vector<TrimmedWord>> windows,
                                                std::size_t min_words = 30, Diagnostics* diag = nullptr) {
  using Get = double (*)(const TrimmedWord&);
  struct Def {
    const char* name;
    Get x, y;
  };
  static const Def defs[] = {
      {"dhat_user~d_user", [](const TrimmedWord& w) { return w.dhat_user; }, [](const TrimmedWord& w) { return w.d_user; }},
      {"dhat_thread~d_thread", [](const TrimmedWord& w) { return w.dhat_thread; },
       [](const TrimmedWord& w) { return w.d_thread; }},
      {"d_user~d_thread", [](const TrimmedWord& w) { return w.d_user; }, [](const TrimmedWord& w) { return w.d_thread; }},
      {"dhat_user~dhat_thread", [](const TrimmedWord& w) { return w.dhat_user; },
       [](const TrimmedWord& w) { return w.dhat_thread; }},
  };
  TrimmedCorrelations out;
  for (const auto& d : defs) out.pairs.push_back({d.name, {}, 0, 0});
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& words = windows[k];
    if (words.size() < min_words) {
      if (diag) diag->push_back("window " + std::to_string(k) + ": " + std::to_string(words.size()) + " valid words");
      continue;
    }
    out.windows.push_back(k);
    for (std::size_t i = 0; i < std::size(defs); ++i) {
      std::vector<double> x, y;
      for (const auto& w : words) {
        x.push_back(defs[i].x(w));
        y.push_back(defs[i].y(w));
      }
      double r = std::numeric_limits<double>::quiet_NaN();
      try {
        r = stats::pearson(x, y);
      } catch (const Error& e) {
        if (diag) diag->push_back("window " + std::to_string(k) + " " + defs[i].name + ": " + e.what());
      }
      out.pairs[i].per_window.push_back(r);
    }
  }
  for (auto& p : out.pairs) {
    std::vector<double> finite;
    for (double r : p.per_window)
      if (std::isfinite(r)) finite.push_back(r);
    p.mean = stats::mean(finite);
    p.sd = stats::sample_sd(finite);
  }
  return out;
}

struct SummaryRow {
  std::string measure;
  stats::BoxStats box;
  std::size_t below_0_4 = 0;  ///< words with value < 0.4 (0 for differences)
};

/// Pooled over windows: box statistics of D^U, D^T, D-hat^U, D-hat^T and of
/// the per-word differences D-hat - D.
inline std::vector<SummaryRow> dissemination_summary(std::span<const std::vector<TrimmedWord>> windows) {
  std::vector<double> v[6];
  for (const auto& words : windows)
    for (const auto& w : words) {
      v[0].push_back(w.d_user);
      v[1].push_back(w.d_thread);
      v[2].push_back(w.dhat_user);
      v[3].push_back(w.dhat_thread);
      v[4].push_back(w.dhat_user - w.d_user);
      v[5].push_back(w.dhat_thread - w.d_thread);
    }
  static const char* names[] = {"d_user", "d_thread", "dhat_user", "dhat_thread", "dhat_user-d_user",
                                "dhat_thread-d_thread"};
  std::vector<SummaryRow> out;
  for (int i = 0; i < 6; ++i) {
    SummaryRow r{names[i], {}, 0};
    if (i < 4) r.below_0_4 = static_cast<std::size_t>(std::count_if(v[i].begin(), v[i].end(), [](double x) { return x < 0.4; }));
    r.box = stats::box_stats(std::move(v[i]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace wordniche

#endif
