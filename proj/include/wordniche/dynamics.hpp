#ifndef WORDNICHE_DYNAMICS_HPP
#define WORDNICHE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wordniche/dissemination.hpp"
#include "wordniche/stats.hpp"

namespace wordniche {

/// All word measures of one window, sorted by word id.
struct MeasureTable {
  Window window;
  std::uint64_t total_tokens = 0;
  std::vector<WordMeasures> rows;

  [[nodiscard]] const WordMeasures* find(WordId word) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), word,
                               [](const WordMeasures& m, WordId w) { return m.word < w; });
    return it != rows.end() && it->word == word ? &*it : nullptr;
  }
};

inline MeasureTable measure_window(const WindowSlice& slice, const MeasureOptions& opts = {}) {
  auto counts = build_counts(slice);
  return {slice.window, counts.total_tokens, compute_measures(counts, opts)};
}

inline std::vector<MeasureTable> measure_windows(std::span<const WindowSlice> slices, const MeasureOptions& opts = {}) {
  std::vector<MeasureTable> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(measure_window(s, opts));
  return out;
}

// ---- window pairing --------------------------------------------------------

enum class PairMode { nonoverlap, all };

inline const char* to_string(PairMode m) { return m == PairMode::nonoverlap ? "nonoverlap" : "all"; }

inline PairMode parse_pair_mode(const std::string& s) {
  if (s == "nonoverlap") return PairMode::nonoverlap;
  if (s == "all") return PairMode::all;
  throw Error("unknown pair mode: " + s);
}

struct PairOptions {
  PairMode mode = PairMode::nonoverlap;
  std::size_t lag = 4;  ///< two years of half-year windows
  std::size_t first_t1 = 0;
  std::optional<std::size_t> last_t1;  ///< inclusive
};

struct IndexPair {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
};

/// Non-overlapping mode steps t1 by the lag, so consecutive pairs abut.
inline std::vector<IndexPair> pair_windows(std::size_t num_windows, const PairOptions& opts = {}) {
  if (opts.lag == 0) throw Error("lag must be positive");
  if (num_windows < opts.lag + 1)
    throw Error("need at least " + std::to_string(opts.lag + 1) + " windows, have " + std::to_string(num_windows));
  std::vector<IndexPair> out;
  const std::size_t step = opts.mode == PairMode::nonoverlap ? opts.lag : 1;
  for (std::size_t t1 = opts.first_t1; t1 + opts.lag < num_windows; t1 += step) {
    if (opts.last_t1 && t1 > *opts.last_t1) break;
    out.push_back({t1, t1 + opts.lag});
  }
  return out;
}

// ---- fate records ----------------------------------------------------------

struct FateRecord {
  WordId word = 0;
  std::uint64_t count_t1 = 0;
  std::uint64_t count_t2 = 0;  ///< 0 when absent at t2
  double d_user = 0;
  double d_thread = 0;
  double log10_f = 0;
  bool informative = false;  ///< at t1
  bool survived = false;     ///< valid at t2
  // Present iff survived.
  std::optional<double> delta_log10_f;
  std::optional<double> delta_d_user;
  std::optional<double> delta_d_thread;
  std::optional<double> d_user_t2;
  std::optional<double> d_thread_t2;
  std::optional<double> log10_f_t2;

  [[nodiscard]] double d(EntityKind kind) const { return kind == EntityKind::users ? d_user : d_thread; }
};

struct WindowPair {
  Window t1;
  Window t2;
  std::vector<FateRecord> records;  ///< one per word valid at t1
};

inline WindowPair join_pair(const MeasureTable& a, const MeasureTable& b) {
  WindowPair p{a.window, b.window, {}};
  for (const auto& m : a.rows) {
    if (!m.valid) continue;
    FateRecord r;
    r.word = m.word;
    r.count_t1 = m.count;
    r.d_user = m.d_user;
    r.d_thread = m.d_thread;
    r.log10_f = m.log10_frequency();
    r.informative = m.informative;
    if (const auto* later = b.find(m.word)) {
      r.count_t2 = later->count;
      r.survived = later->valid;
    }
    if (r.survived) {
      const auto* later = b.find(m.word);
      r.d_user_t2 = later->d_user;
      r.d_thread_t2 = later->d_thread;
      r.log10_f_t2 = later->log10_frequency();
      r.delta_log10_f = *r.log10_f_t2 - r.log10_f;
      r.delta_d_user = later->d_user - m.d_user;
      r.delta_d_thread = later->d_thread - m.d_thread;
    }
    p.records.push_back(std::move(r));
  }
  return p;
}

inline std::vector<WindowPair> join_pairs(std::span<const MeasureTable> tables, std::span<const IndexPair> pairs) {
  std::vector<WindowPair> out;
  out.reserve(pairs.size());
  for (auto [t1, t2] : pairs) out.push_back(join_pair(tables[t1], tables[t2]));
  return out;
}

inline std::vector<FateRecord> pool_records(std::span<const WindowPair> pairs) {
  std::vector<FateRecord> out;
  for (const auto& p : pairs) out.insert(out.end(), p.records.begin(), p.records.end());
  return out;
}

// ---- survival --------------------------------------------------------------

struct SurvivalOptions {
  double bin_width = 0.1;
  double d_max = 1.6;
  std::size_t min_words = 20;
};

struct SurvivalBin {
  double lo = 0;
  double hi = 0;
  std::size_t words = 0;
  std::size_t fallen = 0;
  [[nodiscard]] double fraction() const { return static_cast<double>(fallen) / static_cast<double>(words); }
};

/// Fraction of t1-valid words that fall to N_w <= 5 at t2, per D bin.
/// Underpopulated bins are dropped.
inline std::vector<SurvivalBin> survival_curve(std::span<const FateRecord> records, EntityKind kind,
                                               const SurvivalOptions& opts = {}) {
  const auto nbins = static_cast<std::size_t>(std::llround(opts.d_max / opts.bin_width));
  std::vector<SurvivalBin> bins(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    bins[k].lo = static_cast<double>(k) * opts.bin_width;
    bins[k].hi = static_cast<double>(k + 1) * opts.bin_width;
  }
  for (const auto& r : records) {
    double d = r.d(kind);
    if (d < 0 || d >= opts.d_max) continue;
    auto k = std::min(nbins - 1, static_cast<std::size_t>(d / opts.bin_width));
    ++bins[k].words;
    if (!r.survived) ++bins[k].fallen;
  }
  std::erase_if(bins, [&](const SurvivalBin& b) { return b.words < opts.min_words; });
  return bins;
}

// ---- running statistics ----------------------------------------------------

struct RunningOptions {
  double width = 0.2;
  double step = 0.02;
  std::size_t min_count = 50;
  std::vector<double> percentiles{10, 50, 90};
};

struct RunningPoint {
  double x = 0;
  std::size_t n = 0;
  std::vector<double> values;  ///< one per requested percentile
};

/// Sliding-window percentiles of y over windows [c - width/2, c + width/2]
/// with centers stepping from min x to max x.
inline std::vector<RunningPoint> running_stats(std::span<const double> x, std::span<const double> y,
                                               const RunningOptions& opts = {}) {
  if (x.size() != y.size()) throw Error("running_stats: length mismatch");
  if (x.empty()) throw Error("running_stats: no points");
  if (opts.width <= 0 || opts.step <= 0) throw Error("running_stats: width and step must be positive");
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  const double lo = x[order.front()], hi = x[order.back()];
  std::vector<RunningPoint> out;
  std::vector<double> window;
  std::size_t begin = 0, end = 0;
  for (std::size_t k = 0;; ++k) {
    const double c = lo + static_cast<double>(k) * opts.step;
    if (c > hi + 1e-12) break;
    while (begin < order.size() && x[order[begin]] < c - opts.width / 2) ++begin;
    end = std::max(end, begin);
    while (end < order.size() && x[order[end]] <= c + opts.width / 2) ++end;
    if (end - begin < opts.min_count) continue;
    window.clear();
    for (std::size_t i = begin; i < end; ++i) window.push_back(y[order[i]]);
    std::sort(window.begin(), window.end());
    RunningPoint p{c, window.size(), {}};
    for (double q : opts.percentiles) p.values.push_back(stats::percentile_sorted(window, q));
    out.push_back(std::move(p));
  }
  return out;
}

// ---- summary medians -------------------------------------------------------

struct SummaryOptions {
  std::vector<double> targets{0.4, 1.0};
  double halfwidth = 0.05;
  std::size_t min_words = 20;
};

struct SummaryMedian {
  double target = 0;
  std::size_t n = 0;
  std::optional<double> median;  ///< absent when fewer than min_words survivors
};

/// Median change in log10 f over surviving words with |D - target| <= halfwidth.
inline std::vector<SummaryMedian> summary_medians(std::span<const FateRecord> records, EntityKind kind,
                                                  const SummaryOptions& opts = {}, Diagnostics* diag = nullptr) {
  std::vector<SummaryMedian> out;
  for (double target : opts.targets) {
    std::vector<double> deltas;
    for (const auto& r : records)
      if (r.survived && std::abs(r.d(kind) - target) <= opts.halfwidth) deltas.push_back(*r.delta_log10_f);
    SummaryMedian m{target, deltas.size(), std::nullopt};
    if (deltas.size() >= opts.min_words) {
      m.median = stats::median(std::move(deltas));
    } else if (diag) {
      diag->push_back("summary median at D=" + format_double(target) + " has only " + std::to_string(m.n) +
                      " words");
    }
    out.push_back(m);
  }
  return out;
}

// ---- frequency range -------------------------------------------------------

struct FreqRangeOptions {
  double log10_f_max = -2.52;
  double max_fallen_fraction = 0.05;
  double scan_step = 0.01;
};

struct FreqRange {
  double log10_f_min = 0;
  double log10_f_max = 0;
  bool contains(double log10_f) const { return log10_f >= log10_f_min && log10_f <= log10_f_max; }
};

/// Lowest cutoff, scanned upward from the smallest observed log10 f, at which
/// fewer than 5% of words in [cutoff, f_max] fall below threshold at t2.
inline FreqRange freq_range(std::span<const FateRecord> records, const FreqRangeOptions& opts = {},
                            Diagnostics* diag = nullptr) {
  std::vector<std::pair<double, bool>> pts;  // (log10 f, fallen)
  for (const auto& r : records)
    if (r.log10_f <= opts.log10_f_max) pts.emplace_back(r.log10_f, !r.survived);
  std::sort(pts.begin(), pts.end());
  FreqRange range{opts.log10_f_max, opts.log10_f_max};
  if (pts.empty()) {
    if (diag) diag->push_back("freq_range: no words below f_max");
    return range;
  }
  // suffix_fallen[i] = fallen among pts[i..]
  std::vector<std::size_t> suffix_fallen(pts.size() + 1, 0);
  for (std::size_t i = pts.size(); i-- > 0;) suffix_fallen[i] = suffix_fallen[i + 1] + (pts[i].second ? 1 : 0);
  const double start = pts.front().first;
  for (std::size_t k = 0;; ++k) {
    const double cut = start + static_cast<double>(k) * opts.scan_step;
    if (cut > opts.log10_f_max) break;
    auto i = static_cast<std::size_t>(
        std::lower_bound(pts.begin(), pts.end(), std::make_pair(cut, false)) - pts.begin());
    const std::size_t n = pts.size() - i;
    if (n == 0) break;
    if (static_cast<double>(suffix_fallen[i]) < opts.max_fallen_fraction * static_cast<double>(n)) {
      range.log10_f_min = cut;
      return range;
    }
  }
  if (diag) diag->push_back("freq_range: no cutoff keeps the fallen fraction below threshold");
  return range;
}

// ---- delta correlations ----------------------------------------------------

enum class Direction { forward, reversed };

inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "reversed"; }

struct DeltaCorrelation {
  Direction direction = Direction::forward;
  std::size_t n = 0;
  double r_user = 0;
  double r_thread = 0;
};

/// Forward: r(dlog10 f, dD^U) and r(dlog10 f, dD^T), f(t1) in range.
/// Reversed: r(-dlog10 f, D^U(t2)) and r(-dlog10 f, D^T(t2)), f(t2) in range.
inline DeltaCorrelation delta_correlations(std::span<const FateRecord> records, const FreqRange& range,
                                           Direction direction, std::size_t min_words = 30) {
  std::vector<double> df, du, dt;
  for (const auto& r : records) {
    if (!r.survived) continue;
    if (direction == Direction::forward) {
      if (!range.contains(r.log10_f)) continue;
      df.push_back(*r.delta_log10_f);
      du.push_back(*r.delta_d_user);
      dt.push_back(*r.delta_d_thread);
    } else {
      if (!range.contains(*r.log10_f_t2)) continue;
      df.push_back(-*r.delta_log10_f);
      du.push_back(*r.d_user_t2);
      dt.push_back(*r.d_thread_t2);
    }
  }
  if (df.size() < min_words)
    throw Error("delta_correlations: " + std::to_string(df.size()) + " words, need " + std::to_string(min_words));
  return {direction, df.size(), stats::pearson(df, du), stats::pearson(df, dt)};
}

}  // namespace wordniche

#endif
