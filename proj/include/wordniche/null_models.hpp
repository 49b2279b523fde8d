#ifndef WORDNICHE_NULL_MODELS_HPP
#define WORDNICHE_NULL_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wordniche/dissemination.hpp"
#include "wordniche/stats.hpp"

namespace wordniche {

enum class ShuffleKind { global, within_thread, within_user };

inline const char* to_string(ShuffleKind k) {
  switch (k) {
    case ShuffleKind::global: return "global";
    case ShuffleKind::within_thread: return "within_thread";
    case ShuffleKind::within_user: return "within_user";
  }
  return "?";
}

inline ShuffleKind parse_shuffle_kind(const std::string& s) {
  if (s == "global") return ShuffleKind::global;
  if (s == "within_thread") return ShuffleKind::within_thread;
  if (s == "within_user") return ShuffleKind::within_user;
  throw Error("unknown shuffle scheme: " + s);
}

struct ShuffleScheme {
  ShuffleKind kind = ShuffleKind::global;
  std::uint64_t seed = 0;
  std::size_t replicates = 100;
};

/// Token slots of a window, laid out thread-major: slots of one (thread, user)
/// cell are contiguous and cells are ordered by (thread, user).
///
/// For each shuffle kind the layout keeps a traversal order of slots, the
/// boundaries of the groups inside which words may move, and an initial fill
/// holding every group's word multiset. Everything a shuffle needs is recovered
/// from the count tables, so no post-level data is required.
class SlotLayout {
 public:
  explicit SlotLayout(const WindowCounts& c) : num_words_(c.num_words()) {
    const auto total = static_cast<std::size_t>(c.total_tokens);
    slot_user_.reserve(total);
    slot_thread_.reserve(total);
    std::vector<std::size_t> thread_begin(c.num_threads() + 1, 0);
    // cell_start[(t, u)] in thread-major order, needed for the user-major walk
    std::vector<std::size_t> cell_start;
    cell_start.reserve(c.thread_users.entries.size());
    for (std::size_t t = 0; t < c.num_threads(); ++t) {
      thread_begin[t] = slot_user_.size();
      for (auto [u, m] : c.thread_users.row(t)) {
        cell_start.push_back(slot_user_.size());
        slot_user_.insert(slot_user_.end(), m, u);
        slot_thread_.insert(slot_thread_.end(), m, static_cast<std::uint32_t>(t));
      }
    }
    thread_begin[c.num_threads()] = slot_user_.size();

    user_order_.reserve(total);
    std::vector<std::size_t> user_begin(c.num_users() + 1, 0);
    for (std::size_t u = 0; u < c.num_users(); ++u) {
      user_begin[u] = user_order_.size();
      for (auto [t, m] : c.user_threads.row(u)) {
        auto row = c.thread_users.row(t);
        auto it = std::lower_bound(row.begin(), row.end(), static_cast<std::uint32_t>(u),
                                   [](const EntityCount& e, std::uint32_t v) { return e.entity < v; });
        auto cell = c.thread_users.offsets[t] + static_cast<std::size_t>(it - row.begin());
        for (std::uint64_t k = 0; k < m; ++k) user_order_.push_back(static_cast<std::uint32_t>(cell_start[cell] + k));
      }
    }
    user_begin[c.num_users()] = user_order_.size();

    // global: one group holding all words
    auto& g = plans_[0];
    g.group_offsets = {0, total};
    g.initial.reserve(total);
    for (std::size_t w = 0; w < c.num_words(); ++w)
      g.initial.insert(g.initial.end(), c.word_counts[w], static_cast<std::uint32_t>(w));

    // within_thread: thread slot ranges, filled with n_{w,t}
    auto& th = plans_[1];
    th.group_offsets = thread_begin;
    th.initial.assign(total, 0);
    {
      std::vector<std::size_t> cursor(thread_begin.begin(), thread_begin.end() - 1);
      for (std::size_t w = 0; w < c.num_words(); ++w)
        for (auto [t, n] : c.word_threads.row(w))
          for (std::uint64_t k = 0; k < n; ++k) th.initial[cursor[t]++] = static_cast<std::uint32_t>(w);
    }

    // within_user: positions follow user_order_, filled with n_{w,i}
    auto& us = plans_[2];
    us.group_offsets = user_begin;
    us.initial.assign(total, 0);
    {
      std::vector<std::size_t> cursor(user_begin.begin(), user_begin.end() - 1);
      for (std::size_t w = 0; w < c.num_words(); ++w)
        for (auto [u, n] : c.word_users.row(w))
          for (std::uint64_t k = 0; k < n; ++k) us.initial[cursor[u]++] = static_cast<std::uint32_t>(w);
    }
  }

  [[nodiscard]] std::size_t num_slots() const { return slot_user_.size(); }
  [[nodiscard]] std::size_t num_words() const { return num_words_; }
  [[nodiscard]] std::uint32_t slot_user(std::size_t k) const { return slot_user_[k]; }
  [[nodiscard]] std::uint32_t slot_thread(std::size_t k) const { return slot_thread_[k]; }
  [[nodiscard]] const std::vector<std::uint32_t>& user_order() const { return user_order_; }

  /// Slot index of the k-th traversal position for a shuffle kind.
  [[nodiscard]] std::size_t position_to_slot(ShuffleKind kind, std::size_t k) const {
    return kind == ShuffleKind::within_user ? user_order_[k] : k;
  }

  struct Plan {
    std::vector<std::size_t> group_offsets;
    std::vector<std::uint32_t> initial;  ///< word per traversal position
  };

  [[nodiscard]] const Plan& plan(ShuffleKind kind) const { return plans_[static_cast<int>(kind)]; }

 private:
  std::size_t num_words_;
  std::vector<std::uint32_t> slot_user_;
  std::vector<std::uint32_t> slot_thread_;
  std::vector<std::uint32_t> user_order_;
  Plan plans_[3];
};

/// Word held by each slot after one shuffle replicate.
struct NullAssignment {
  std::vector<std::uint32_t> slot_words;
};

inline std::mt19937_64 replicate_engine(std::uint64_t seed, std::size_t replicate) {
  return std::mt19937_64(stream_seed(seed, replicate));
}

/// One replicate of a shuffle: words permuted uniformly inside each group.
/// Conserves every m_i, every thread total and every N_w.
inline NullAssignment shuffle(const SlotLayout& layout, ShuffleKind kind, std::uint64_t seed, std::size_t replicate) {
  const auto& plan = layout.plan(kind);
  auto eng = replicate_engine(seed, replicate);
  std::vector<std::uint32_t> words = plan.initial;
  for (std::size_t g = 0; g + 1 < plan.group_offsets.size(); ++g) {
    auto b = words.begin() + static_cast<std::ptrdiff_t>(plan.group_offsets[g]);
    auto e = words.begin() + static_cast<std::ptrdiff_t>(plan.group_offsets[g + 1]);
    if (e - b > 1) std::shuffle(b, e, eng);
  }
  NullAssignment out;
  if (kind == ShuffleKind::within_user) {
    out.slot_words.assign(words.size(), 0);
    for (std::size_t k = 0; k < words.size(); ++k) out.slot_words[layout.user_order()[k]] = words[k];
  } else {
    out.slot_words = std::move(words);
  }
  return out;
}

inline NullAssignment shuffle(const SlotLayout& layout, const ShuffleScheme& scheme, std::size_t replicate) {
  return shuffle(layout, scheme.kind, scheme.seed, replicate);
}

/// U_w and T_w recomputed from an assignment.
struct DistinctCounts {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> threads;
};

inline DistinctCounts distinct_entities(const SlotLayout& layout, const NullAssignment& a) {
  const auto nw = layout.num_words();
  DistinctCounts d{std::vector<std::uint32_t>(nw, 0), std::vector<std::uint32_t>(nw, 0)};
  constexpr auto none = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> last(nw, none);
  for (std::size_t k = 0; k < a.slot_words.size(); ++k) {
    auto w = a.slot_words[k];
    auto t = layout.slot_thread(k);
    if (last[w] != t) {
      last[w] = t;
      ++d.threads[w];
    }
  }
  std::fill(last.begin(), last.end(), none);
  for (auto k : layout.user_order()) {
    auto w = a.slot_words[k];
    auto u = layout.slot_user(k);
    if (last[w] != u) {
      last[w] = u;
      ++d.users[w];
    }
  }
  return d;
}

/// Per-word mean and standard deviation of D^U and D^T under a shuffle.
struct NullSummary {
  std::size_t replicates = 0;
  std::vector<double> mean_d_user, sd_d_user;
  std::vector<double> mean_d_thread, sd_d_thread;
};

inline NullSummary null_dissemination(const WindowCounts& counts, const ShuffleScheme& scheme,
                                      Baseline baseline = Baseline::exact) {
  if (scheme.replicates == 0) throw Error("replicates must be >= 1");
  SlotLayout layout(counts);
  DisseminationModel model(counts);
  const auto nw = counts.num_words();
  std::vector<double> eu(nw), et(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    eu[w] = model.expected(EntityKind::users, counts.word_counts[w], baseline);
    et[w] = model.expected(EntityKind::threads, counts.word_counts[w], baseline);
  }
  std::vector<double> su(nw, 0), su2(nw, 0), st(nw, 0), st2(nw, 0);
  for (std::size_t r = 0; r < scheme.replicates; ++r) {
    auto d = distinct_entities(layout, shuffle(layout, scheme, r));
    for (std::size_t w = 0; w < nw; ++w) {
      double du = d.users[w] / eu[w], dt = d.threads[w] / et[w];
      su[w] += du;
      su2[w] += du * du;
      st[w] += dt;
      st2[w] += dt * dt;
    }
  }
  NullSummary s;
  s.replicates = scheme.replicates;
  const auto R = static_cast<double>(scheme.replicates);
  auto sd = [R](double sum, double sum2) {
    if (R < 2) return 0.0;
    return std::sqrt(std::max(0.0, (sum2 - sum * sum / R) / (R - 1)));
  };
  for (std::size_t w = 0; w < nw; ++w) {
    s.mean_d_user.push_back(su[w] / R);
    s.sd_d_user.push_back(sd(su[w], su2[w]));
    s.mean_d_thread.push_back(st[w] / R);
    s.sd_d_thread.push_back(sd(st[w], st2[w]));
  }
  return s;
}

struct BandOptions {
  EntityKind kind = EntityKind::users;
  Baseline baseline = Baseline::poisson;
  double bin_width = 0.1;  ///< in log10 f
  std::vector<double> percentiles{10, 90};
  std::size_t min_samples = 20;
  std::uint64_t min_count = 6;
};

struct BandBin {
  double center = 0;  ///< log10 f
  std::size_t n = 0;  ///< word-replicate samples
  std::vector<double> values;
};

struct PercentileBand {
  EntityKind kind = EntityKind::users;
  std::vector<double> percentiles;
  std::vector<BandBin> bins;
};

/// Monte Carlo percentiles of D under a shuffle, binned by log10 f.
inline PercentileBand mc_band(const WindowCounts& counts, const ShuffleScheme& scheme, const BandOptions& opts = {}) {
  if (counts.total_tokens == 0) throw Error("empty window");
  if (scheme.replicates == 0) throw Error("replicates must be >= 1");
  SlotLayout layout(counts);
  DisseminationModel model(counts);
  std::map<long, std::vector<double>> samples;
  std::vector<long> bin_of(counts.num_words());
  std::vector<double> expected(counts.num_words());
  for (std::size_t w = 0; w < counts.num_words(); ++w) {
    const auto n = counts.word_counts[w];
    const double lf = std::log10(static_cast<double>(n) / static_cast<double>(counts.total_tokens));
    bin_of[w] = static_cast<long>(std::floor(lf / opts.bin_width));
    expected[w] = model.expected(opts.kind, n, opts.baseline);
  }
  for (std::size_t r = 0; r < scheme.replicates; ++r) {
    auto d = distinct_entities(layout, shuffle(layout, scheme, r));
    const auto& observed = opts.kind == EntityKind::users ? d.users : d.threads;
    for (std::size_t w = 0; w < counts.num_words(); ++w) {
      if (counts.word_counts[w] < opts.min_count) continue;
      samples[bin_of[w]].push_back(observed[w] / expected[w]);
    }
  }
  PercentileBand band;
  band.kind = opts.kind;
  band.percentiles = opts.percentiles;
  for (auto& [bin, vals] : samples) {
    if (vals.size() < opts.min_samples) continue;
    std::sort(vals.begin(), vals.end());
    BandBin b;
    b.center = (static_cast<double>(bin) + 0.5) * opts.bin_width;
    b.n = vals.size();
    for (double p : opts.percentiles) b.values.push_back(stats::percentile_sorted(vals, p));
    band.bins.push_back(std::move(b));
  }
  return band;
}

enum class ConditionalMode { users_within_threads, threads_within_users };
enum class ConditionalMethod { analytic, mc };

struct ConditionalExpectation {
  double value = 0;
  double standard_error = 0;  ///< 0 for the analytic method
  std::vector<std::string> warnings;
};

/// Closed-form conditional baseline for every word, in local order.
///
/// users_within_threads: sum_i [1 - prod_t prod_{j<n_{w,t}} (1 - m_{i,t}/(N_t - j))]
/// threads_within_users: the same with users and threads exchanged.
inline std::vector<double> conditional_expected_analytic(const WindowCounts& c, ConditionalMode mode) {
  const bool by_users = mode == ConditionalMode::users_within_threads;
  const auto& word_groups = by_users ? c.word_threads : c.word_users;
  const auto& group_members = by_users ? c.thread_users : c.user_threads;
  const auto& group_totals = by_users ? c.thread_tokens : c.user_tokens;
  const auto members = by_users ? c.num_users() : c.num_threads();

  std::vector<double> miss(members, 1.0);
  std::vector<char> seen(members, 0);
  std::vector<std::uint32_t> touched;
  std::vector<double> out(c.num_words(), 0.0);
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    touched.clear();
    for (auto [g, n] : word_groups.row(w)) {
      for (auto [member, m] : group_members.row(g)) {
        if (!seen[member]) {
          seen[member] = 1;
          touched.push_back(member);
        }
        miss[member] *= prob_missed(n, m, group_totals[g]);
      }
    }
    double sum = 0;
    for (auto member : touched) {
      sum += 1.0 - miss[member];
      miss[member] = 1.0;
      seen[member] = 0;
    }
    out[w] = sum;
  }
  return out;
}

/// Monte Carlo conditional baseline for every word: mean distinct entities
/// under the matching restricted shuffle, with its standard error.
inline std::vector<ConditionalExpectation> conditional_expected_mc(const WindowCounts& c, ConditionalMode mode,
                                                                   std::uint64_t seed, std::size_t replicates) {
  if (replicates == 0) throw Error("replicates must be >= 1");
  const bool by_users = mode == ConditionalMode::users_within_threads;
  const auto kind = by_users ? ShuffleKind::within_thread : ShuffleKind::within_user;
  SlotLayout layout(c);
  const auto nw = c.num_words();
  std::vector<double> sum(nw, 0), sum2(nw, 0);
  for (std::size_t r = 0; r < replicates; ++r) {
    auto d = distinct_entities(layout, shuffle(layout, kind, seed, r));
    const auto& v = by_users ? d.users : d.threads;
    for (std::size_t w = 0; w < nw; ++w) {
      sum[w] += v[w];
      sum2[w] += static_cast<double>(v[w]) * v[w];
    }
  }
  const auto R = static_cast<double>(replicates);
  std::vector<ConditionalExpectation> out(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    out[w].value = sum[w] / R;
    double var = replicates > 1 ? std::max(0.0, (sum2[w] - sum[w] * sum[w] / R) / (R - 1)) : 0.0;
    out[w].standard_error = std::sqrt(var / R);
    if (replicates < 30) out[w].warnings.push_back("fewer than 30 replicates; estimate is noisy");
  }
  return out;
}

inline ConditionalExpectation conditional_expected(const WindowCounts& c, WordId word, ConditionalMode mode,
                                                   ConditionalMethod method = ConditionalMethod::analytic,
                                                   const ShuffleScheme& scheme = {}, std::uint64_t min_count = 6) {
  auto w = c.local_word(word);
  if (!w) throw Error("word not present in window");
  if (c.word_counts[*w] < min_count) throw Error("conditional baseline requires N_w > " + std::to_string(min_count - 1));
  if (method == ConditionalMethod::analytic) return {conditional_expected_analytic(c, mode)[*w], 0.0, {}};
  return conditional_expected_mc(c, mode, scheme.seed, scheme.replicates)[*w];
}

struct ConditionalMeasures {
  WordId word = 0;
  double users_expected = 0;    ///< within-thread baseline
  double threads_expected = 0;  ///< within-user baseline
  double dhat_user = 0;
  double dhat_thread = 0;
};

/// D-hat for every word with N_w >= min_count, analytic baselines.
inline std::vector<ConditionalMeasures> dhat_all(const WindowCounts& c, std::uint64_t min_count = 6) {
  auto eu = conditional_expected_analytic(c, ConditionalMode::users_within_threads);
  auto et = conditional_expected_analytic(c, ConditionalMode::threads_within_users);
  std::vector<ConditionalMeasures> out;
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    if (c.word_counts[w] < min_count) continue;
    ConditionalMeasures m;
    m.word = c.words[w];
    m.users_expected = eu[w];
    m.threads_expected = et[w];
    m.dhat_user = static_cast<double>(c.distinct_users(w)) / eu[w];
    m.dhat_thread = static_cast<double>(c.distinct_threads(w)) / et[w];
    out.push_back(m);
  }
  return out;
}

inline ConditionalMeasures dhat(const WindowCounts& c, WordId word, std::uint64_t min_count = 6) {
  auto w = c.local_word(word);
  if (!w) throw Error("word not present in window");
  if (c.word_counts[*w] < min_count) throw Error("dhat requires N_w > " + std::to_string(min_count - 1));
  auto eu = conditional_expected_analytic(c, ConditionalMode::users_within_threads);
  auto et = conditional_expected_analytic(c, ConditionalMode::threads_within_users);
  return {word, eu[*w], et[*w], static_cast<double>(c.distinct_users(*w)) / eu[*w],
          static_cast<double>(c.distinct_threads(*w)) / et[*w]};
}

}  // namespace wordniche

#endif
