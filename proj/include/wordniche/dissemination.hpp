#ifndef WORDNICHE_DISSEMINATION_HPP
#define WORDNICHE_DISSEMINATION_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wordniche/counting.hpp"

namespace wordniche {

enum class Baseline { exact, poisson };
enum class EntityKind { users, threads };

inline const char* to_string(Baseline b) { return b == Baseline::exact ? "exact" : "poisson"; }
inline const char* to_string(EntityKind k) { return k == EntityKind::users ? "users" : "threads"; }

inline Baseline parse_baseline(const std::string& s) {
  if (s == "exact") return Baseline::exact;
  if (s == "poisson") return Baseline::poisson;
  throw Error("unknown baseline: " + s);
}

/// Entities grouped by token count; the baseline depends on sizes only.
struct SizeClass {
  std::uint64_t size = 0;
  std::uint64_t multiplicity = 0;
};

inline std::vector<SizeClass> size_classes(std::span<const std::uint64_t> sizes) {
  std::map<std::uint64_t, std::uint64_t> hist;
  for (auto m : sizes)
    if (m > 0) ++hist[m];
  std::vector<SizeClass> out;
  out.reserve(hist.size());
  for (auto [m, k] : hist) out.push_back({m, k});
  return out;
}

/// Products longer than this are evaluated through log-gamma.
inline constexpr std::uint64_t kDirectProductLimit = 1000;

/// Probability that an entity holding `size` of `total` slots receives none of
/// `n` occurrences placed uniformly without replacement:
/// prod_{j<n} (1 - size/(total - j)) = C(total - size, n) / C(total, n).
inline double prob_missed(std::uint64_t n, std::uint64_t size, std::uint64_t total) {
  if (size == 0 || n == 0) return 1.0;
  if (size + n > total) return 0.0;
  if (n <= kDirectProductLimit) {
    double p = 1.0;
    const auto m = static_cast<double>(size);
    for (std::uint64_t j = 0; j < n; ++j) p *= 1.0 - m / static_cast<double>(total - j);
    return std::clamp(p, 0.0, 1.0);
  }
  const auto N = static_cast<double>(total), m = static_cast<double>(size), k = static_cast<double>(n);
  double lp = std::lgamma(N - m + 1) - std::lgamma(N - m - k + 1) - std::lgamma(N + 1) + std::lgamma(N - k + 1);
  return std::clamp(std::exp(lp), 0.0, 1.0);
}

namespace detail {

inline double exact_from_classes(std::uint64_t n, std::span<const SizeClass> classes, std::uint64_t total,
                                 Diagnostics* diag) {
  double sum = 0;
  for (auto [m, k] : classes) {
    // Some factor of the product would be negative: the entity cannot miss.
    if (diag && n > 1 && m + n - 1 > total)
      diag->push_back("entity of size " + std::to_string(m) + " forced to hold the word (N_w=" + std::to_string(n) +
                      ", N_A=" + std::to_string(total) + "); probability clamped to 1");
    sum += static_cast<double>(k) * (1.0 - prob_missed(n, m, total));
  }
  return sum;
}

inline double poisson_from_classes(double f, std::span<const SizeClass> classes) {
  double sum = 0;
  for (auto [m, k] : classes) sum += static_cast<double>(k) * -std::expm1(-f * static_cast<double>(m));
  return sum;
}

}  // namespace detail

/// Expected number of distinct entities receiving at least one of n tokens
/// when all tokens are shuffled over slots with entity sizes held fixed.
inline double expected_entities_exact(std::uint64_t n, std::span<const std::uint64_t> sizes, std::uint64_t total,
                                      Diagnostics* diag = nullptr) {
  std::uint64_t s = 0;
  for (auto m : sizes) s += m;
  if (s != total) throw Error("entity sizes do not sum to N_A");
  if (n > total) throw Error("N_w exceeds N_A");
  auto classes = size_classes(sizes);
  return detail::exact_from_classes(n, classes, total, diag);
}

/// Dilute-limit approximation sum_i (1 - exp(-f m_i)).
inline double expected_entities_poisson(double f, std::span<const std::uint64_t> sizes) {
  double sum = 0;
  for (auto m : sizes) sum += -std::expm1(-f * static_cast<double>(m));
  return sum;
}

struct MeasureOptions {
  Baseline baseline = Baseline::poisson;
  std::uint64_t min_count = 6;  ///< N_w > 5
  double log10_f_max = -2.52;   ///< words above this are flagged not informative
};

struct WordMeasures {
  WordId word = 0;
  std::uint64_t count = 0;  ///< N_w
  double frequency = 0;
  std::uint64_t users = 0;    ///< U_w
  std::uint64_t threads = 0;  ///< T_w
  double users_expected = 0;
  double threads_expected = 0;
  double d_user = 0;
  double d_thread = 0;
  double d_user_max = 0;
  double d_thread_max = 0;
  bool valid = false;        ///< N_w >= min_count
  bool informative = false;  ///< valid and log10 f <= log10_f_max

  [[nodiscard]] double log10_frequency() const { return std::log10(frequency); }
};

/// Baseline expectations for one window, memoized by N_w.
class DisseminationModel {
 public:
  explicit DisseminationModel(const WindowCounts& counts)
      : counts_(&counts),
        user_classes_(size_classes(counts.user_tokens)),
        thread_classes_(size_classes(counts.thread_tokens)) {}

  double expected(EntityKind kind, std::uint64_t n, Baseline baseline, Diagnostics* diag = nullptr) const {
    const auto& classes = kind == EntityKind::users ? user_classes_ : thread_classes_;
    if (baseline == Baseline::poisson) {
      double f = static_cast<double>(n) / static_cast<double>(counts_->total_tokens);
      return detail::poisson_from_classes(f, classes);
    }
    auto& cache = kind == EntityKind::users ? user_cache_ : thread_cache_;
    if (!diag) {
      if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    double v = detail::exact_from_classes(n, classes, counts_->total_tokens, diag);
    cache.emplace(n, v);
    return v;
  }

  WordMeasures measure(std::size_t w, const MeasureOptions& opts) const {
    const auto& c = *counts_;
    WordMeasures m;
    m.word = c.words.at(w);
    m.count = c.word_counts[w];
    m.frequency = static_cast<double>(m.count) / static_cast<double>(c.total_tokens);
    m.users = c.distinct_users(w);
    m.threads = c.distinct_threads(w);
    m.users_expected = expected(EntityKind::users, m.count, opts.baseline);
    m.threads_expected = expected(EntityKind::threads, m.count, opts.baseline);
    m.d_user = static_cast<double>(m.users) / m.users_expected;
    m.d_thread = static_cast<double>(m.threads) / m.threads_expected;
    m.d_user_max = static_cast<double>(std::min<std::uint64_t>(m.count, c.num_users())) / m.users_expected;
    m.d_thread_max = static_cast<double>(std::min<std::uint64_t>(m.count, c.num_threads())) / m.threads_expected;
    m.valid = m.count >= opts.min_count;
    m.informative = m.valid && std::log10(m.frequency) <= opts.log10_f_max;
    return m;
  }

 private:
  const WindowCounts* counts_;
  std::vector<SizeClass> user_classes_;
  std::vector<SizeClass> thread_classes_;
  mutable std::unordered_map<std::uint64_t, double> user_cache_;
  mutable std::unordered_map<std::uint64_t, double> thread_cache_;
};

/// One row per word present in the window, in local (global-id) order.
inline std::vector<WordMeasures> compute_measures(const WindowCounts& counts, const MeasureOptions& opts = {}) {
  std::vector<WordMeasures> out;
  if (counts.total_tokens == 0) return out;
  DisseminationModel model(counts);
  out.reserve(counts.num_words());
  for (std::size_t w = 0; w < counts.num_words(); ++w) out.push_back(model.measure(w, opts));
  return out;
}

/// D^U or D^T of a single word.
struct EntityDissemination {
  std::uint64_t observed = 0;
  double expected = 0;
  double value = 0;
  double upper_bound = 0;
  bool valid = false;
};

inline EntityDissemination dissemination_measure(const WindowCounts& counts, WordId word, EntityKind kind,
                                                 Baseline baseline, std::uint64_t min_count = 6,
                                                 Diagnostics* diag = nullptr) {
  auto w = counts.local_word(word);
  if (!w) throw Error("word not present in window");
  DisseminationModel model(counts);
  const auto n = counts.word_counts[*w];
  EntityDissemination d;
  d.observed = kind == EntityKind::users ? counts.distinct_users(*w) : counts.distinct_threads(*w);
  d.expected = model.expected(kind, n, baseline, diag);
  d.value = static_cast<double>(d.observed) / d.expected;
  const auto entities = kind == EntityKind::users ? counts.num_users() : counts.num_threads();
  d.upper_bound = static_cast<double>(std::min<std::uint64_t>(n, entities)) / d.expected;
  d.valid = n >= min_count;
  return d;
}

/// Residual IDF: log(T_equal) - log(T_w), with T_equal the Poisson expectation
/// under equal thread lengths, N_T (1 - exp(-N_w / N_T)).
inline double residual_idf(const WindowCounts& counts, WordId word, std::uint64_t min_count = 6) {
  auto w = counts.local_word(word);
  if (!w) throw Error("word not present in window");
  const auto n = counts.word_counts[*w];
  if (n < min_count) throw Error("residual_idf requires N_w > " + std::to_string(min_count - 1));
  const auto tw = counts.distinct_threads(*w);
  if (tw == 0) throw Error("T_w = 0");
  const auto nt = static_cast<double>(counts.num_threads());
  const double expected = nt * -std::expm1(-static_cast<double>(n) / nt);
  return std::log(expected) - std::log(static_cast<double>(tw));
}

}  // namespace wordniche

#endif
