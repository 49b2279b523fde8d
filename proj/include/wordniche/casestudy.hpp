#ifndef WORDNICHE_CASESTUDY_HPP
#define WORDNICHE_CASESTUDY_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wordniche/dynamics.hpp"
#include "wordniche/stats.hpp"

namespace wordniche {

struct RisingOptions {
  double quiet_years = 2;
  std::size_t min_active_windows = 4;
  std::size_t min_consecutive = 3;
  std::optional<std::size_t> horizon;  ///< last window index considered
};

/// Words absent from every window centered in the first quiet_years (counted
/// from the first window's start) and valid in at least min_active_windows
/// windows, min_consecutive of them in a row.
inline std::vector<WordId> detect_rising(std::span<const MeasureTable> tables, const RisingOptions& opts = {}) {
  const std::size_t n = opts.horizon ? std::min(tables.size(), *opts.horizon + 1) : tables.size();
  const auto needed = static_cast<std::size_t>(std::ceil(opts.quiet_years * 2)) + opts.min_active_windows;
  if (n < needed)
    throw Error("detect_rising: need at least " + std::to_string(needed) + " windows, have " + std::to_string(n));
  using namespace std::chrono;
  const auto quiet_end = tables[0].window.start + duration_cast<seconds>(duration<double, days::period>(365.25 * opts.quiet_years));

  std::map<WordId, std::vector<char>> valid;  // per word, per window
  std::vector<char> early;                    // words seen in the quiet period
  auto mark_early = [&](WordId w) {
    if (w >= early.size()) early.resize(w + 1, 0);
    early[w] = 1;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const bool quiet = tables[k].window.center < quiet_end;
    for (const auto& r : tables[k].rows) {
      if (quiet) {
        mark_early(r.word);
      } else if (r.valid) {
        auto& v = valid[r.word];
        v.resize(n, 0);
        v[k] = 1;
      }
    }
  }
  std::vector<WordId> out;
  for (const auto& [w, v] : valid) {
    if (w < early.size() && early[w]) continue;
    std::size_t active = 0, run = 0, best = 0;
    for (char x : v) {
      active += x ? 1 : 0;
      run = x ? run + 1 : 0;
      best = std::max(best, run);
    }
    if (active >= opts.min_active_windows && best >= opts.min_consecutive) out.push_back(w);
  }
  return out;
}

struct TrajectoryPoint {
  std::size_t window = 0;
  Timestamp center{};
  std::uint64_t count = 0;
  double frequency = 0;
  bool valid = false;
  std::optional<double> d_user;  ///< present when valid
  std::optional<double> d_thread;
};

struct TrajectorySeries {
  WordId word = 0;
  std::string label;  ///< "P", "S" or empty
  std::vector<TrajectoryPoint> points;
  std::optional<std::pair<std::size_t, std::size_t>> rising_period;  ///< [first valid, argmax N_w]
};

inline TrajectorySeries trajectory(WordId word, std::span<const MeasureTable> tables) {
  TrajectorySeries s;
  s.word = word;
  bool seen = false;
  std::optional<std::size_t> first_valid, peak;
  for (std::size_t k = 0; k < tables.size(); ++k) {
    TrajectoryPoint p;
    p.window = tables[k].window.index;
    p.center = tables[k].window.center;
    if (const auto* m = tables[k].find(word)) {
      seen = true;
      p.count = m->count;
      p.frequency = m->frequency;
      p.valid = m->valid;
      if (m->valid) {
        p.d_user = m->d_user;
        p.d_thread = m->d_thread;
        if (!first_valid) first_valid = k;
      }
      if (!peak || m->count > s.points[*peak].count) peak = k;
    }
    s.points.push_back(p);
  }
  if (!seen) throw Error("trajectory: word never observed");
  if (first_valid) s.rising_period = std::make_pair(*first_valid, *peak);
  return s;
}

/// N_w per window divided by its maximum over windows.
inline std::vector<double> normalized_occurrences(const TrajectorySeries& s) {
  std::uint64_t peak = 0;
  for (const auto& p : s.points) peak = std::max(peak, p.count);
  std::vector<double> out;
  for (const auto& p : s.points)
    out.push_back(peak ? static_cast<double>(p.count) / static_cast<double>(peak) : 0.0);
  return out;
}

inline std::vector<std::uint64_t> total_tokens_series(std::span<const MeasureTable> tables) {
  std::vector<std::uint64_t> out;
  for (const auto& t : tables) out.push_back(t.total_tokens);
  return out;
}

enum class CohortScope { all_windows, rising_period };

inline const char* to_string(CohortScope s) { return s == CohortScope::all_windows ? "all_windows" : "rising_period"; }

struct WordMeans {
  WordId word = 0;
  std::size_t windows = 0;
  double mean_f = 0;
  double mean_d_user = 0;
  double mean_d_thread = 0;
};

struct CohortStats {
  CohortScope scope = CohortScope::all_windows;
  std::vector<WordMeans> words;
  stats::BoxStats frequency;
  stats::BoxStats d_user;
  stats::BoxStats d_thread;
};

/// Per word, means over valid windows in scope; then box statistics across words.
inline CohortStats cohort_stats(std::span<const TrajectorySeries> cohort, CohortScope scope,
                                Diagnostics* diag = nullptr) {
  if (cohort.empty()) throw Error("cohort_stats: empty cohort");
  CohortStats out;
  out.scope = scope;
  std::vector<double> f, du, dt;
  for (const auto& s : cohort) {
    std::size_t lo = 0, hi = s.points.size();
    if (scope == CohortScope::rising_period) {
      if (!s.rising_period) {
        if (diag) diag->push_back("word " + std::to_string(s.word) + ": no rising period");
        continue;
      }
      lo = s.rising_period->first;
      hi = s.rising_period->second + 1;
    }
    WordMeans m{s.word, 0, 0, 0, 0};
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& p = s.points[k];
      if (!p.valid) continue;
      ++m.windows;
      m.mean_f += p.frequency;
      m.mean_d_user += *p.d_user;
      m.mean_d_thread += *p.d_thread;
    }
    if (m.windows == 0) {
      if (diag) diag->push_back("word " + std::to_string(s.word) + ": no valid window in scope");
      continue;
    }
    const auto n = static_cast<double>(m.windows);
    m.mean_f /= n;
    m.mean_d_user /= n;
    m.mean_d_thread /= n;
    f.push_back(m.mean_f);
    du.push_back(m.mean_d_user);
    dt.push_back(m.mean_d_thread);
    out.words.push_back(m);
  }
  out.frequency = stats::box_stats(std::move(f));
  out.d_user = stats::box_stats(std::move(du));
  out.d_thread = stats::box_stats(std::move(dt));
  return out;
}

/// Word labels, one "word,label" pair per line; a header line starting with
/// "word," and lines starting with '#' are skipped.
inline std::map<std::string, std::string> parse_labels(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || (lineno == 1 && line.rfind("word,", 0) == 0)) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("labels line " + std::to_string(lineno) + ": expected word,label");
    auto word = trim(line.substr(0, comma));
    auto label = trim(line.substr(comma + 1));
    if (word.empty() || label.empty()) throw Error("labels line " + std::to_string(lineno) + ": empty field");
    out[word] = label;
  }
  return out;
}

/// Example product/person words (P) and slang words (S); not exhaustive.
inline std::map<std::string, std::string> starter_labels() {
  std::map<std::string, std::string> out;
  for (const char* w : {"gnome", "ssh", "eminem", "bush", "saddam", "iraq"}) out[w] = "P";
  for (const char* w : {"lol", "iirc", "prolly", "addy", "y2k", "boxen", "rofl"}) out[w] = "S";
  return out;
}

}  // namespace wordniche

#endif
