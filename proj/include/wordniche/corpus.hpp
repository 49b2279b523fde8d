#ifndef WORDNICHE_CORPUS_HPP
#define WORDNICHE_CORPUS_HPP

#include <chrono>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "wordniche/common.hpp"

namespace wordniche {

using Timestamp = std::chrono::sys_seconds;

struct Post {
  std::string post_id;
  std::string user_id;
  std::string thread_id;
  Timestamp timestamp{};
  std::string body;
};

struct Corpus {
  std::vector<Post> posts;
};

namespace detail {

inline bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

inline bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace detail

/// Parses YYYY-MM-DD[(T| )HH:MM[:SS[.frac]]][Z|+HH:MM|-HH:MM|+HHMM] into UTC.
/// Fractional seconds are truncated.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  using detail::expect;
  using detail::read_int;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!read_int(s, pos, 4, y) || !expect(s, pos, '-') || !read_int(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_int(s, pos, 2, d))
    return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  long offset_seconds = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, hh) || !expect(s, pos, ':') || !read_int(s, pos, 2, mm)) return std::nullopt;
    if (expect(s, pos, ':')) {
      if (!read_int(s, pos, 2, ss)) return std::nullopt;
      if (expect(s, pos, '.') || expect(s, pos, ',')) {
        std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return std::nullopt;
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    if (pos < s.size()) {
      if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh = 0, om = 0;
        if (!read_int(s, pos, 2, oh)) return std::nullopt;
        expect(s, pos, ':');
        if (!read_int(s, pos, 2, om)) return std::nullopt;
        if (oh > 23 || om > 59) return std::nullopt;
        offset_seconds = sign * (oh * 3600L + om * 60L);
      } else {
        return std::nullopt;
      }
    }
    if (pos != s.size()) return std::nullopt;
  }
  return Timestamp{sys_days{ymd}} + hours{hh} + minutes{mm} + seconds{ss} - seconds{offset_seconds};
}

/// Canonical "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

inline std::string format_date(Timestamp t) { return format_timestamp(t).substr(0, 10); }

struct RecordError {
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t records = 0;  ///< non-blank lines seen
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t malformed = 0;  ///< subset of rejected that failed to parse or validate
  std::vector<RecordError> errors;
};

struct IngestOptions {
  double max_malformed_fraction = 0.10;
  Timestamp earliest = Timestamp{std::chrono::sys_days{std::chrono::year{1980} / 1 / 1}};
  /// Latest admissible timestamp; defaults to the wall clock at ingest time.
  std::optional<Timestamp> latest;
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

/// Thrown when too many lines are malformed; carries the full report.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, IngestReport report) : Error(what), report_(std::move(report)) {}
  [[nodiscard]] const IngestReport& report() const { return report_; }

 private:
  IngestReport report_;
};

namespace detail {

inline std::optional<std::string> id_field(const nlohmann::json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return std::nullopt;
}

}  // namespace detail

/// Reads one JSON object per line with keys post_id, user_id, thread_id,
/// timestamp (ISO-8601) and body. Blank lines are skipped.
inline IngestResult ingest(std::istream& in, const IngestOptions& opts = {}) {
  IngestResult out;
  auto& rep = out.report;
  const Timestamp latest =
      opts.latest.value_or(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;

  auto reject = [&](std::string reason, bool malformed) {
    ++rep.rejected;
    if (malformed) ++rep.malformed;
    rep.errors.push_back({lineno, std::move(reason)});
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++rep.records;
    auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      reject("not a JSON object", true);
      continue;
    }
    auto post_id = detail::id_field(rec, "post_id");
    auto user_id = detail::id_field(rec, "user_id");
    auto thread_id = detail::id_field(rec, "thread_id");
    if (!post_id || post_id->empty()) {
      reject("missing post_id", true);
      continue;
    }
    if (!user_id || user_id->empty()) {
      reject("missing user_id", true);
      continue;
    }
    if (!thread_id || thread_id->empty()) {
      reject("missing thread_id", true);
      continue;
    }
    auto ts_it = rec.find("timestamp");
    if (ts_it == rec.end() || !ts_it->is_string()) {
      reject("missing timestamp", true);
      continue;
    }
    auto ts = parse_timestamp(ts_it->get_ref<const std::string&>());
    if (!ts) {
      reject("unparseable timestamp", true);
      continue;
    }
    if (*ts < opts.earliest || *ts > latest) {
      reject("timestamp out of range", true);
      continue;
    }
    auto body_it = rec.find("body");
    if (body_it == rec.end() || !body_it->is_string()) {
      reject("missing body", true);
      continue;
    }
    if (!seen.insert(*post_id).second) {
      reject("duplicate id", false);
      continue;
    }
    out.corpus.posts.push_back(
        Post{std::move(*post_id), std::move(*user_id), std::move(*thread_id), *ts, body_it->get<std::string>()});
    ++rep.accepted;
  }

  if (rep.records > 0 &&
      static_cast<double>(rep.malformed) > opts.max_malformed_fraction * static_cast<double>(rep.records)) {
    throw IngestError("ingest failed: " + std::to_string(rep.malformed) + " of " + std::to_string(rep.records) +
                          " records malformed",
                      rep);
  }
  return out;
}

/// Serializes one post in the ingest format, without the trailing newline.
inline std::string to_record(const Post& p) {
  nlohmann::ordered_json j;
  j["post_id"] = p.post_id;
  j["user_id"] = p.user_id;
  j["thread_id"] = p.thread_id;
  j["timestamp"] = format_timestamp(p.timestamp);
  j["body"] = p.body;
  return j.dump();
}

}  // namespace wordniche

#endif
