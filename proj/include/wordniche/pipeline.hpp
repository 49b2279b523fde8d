#ifndef WORDNICHE_PIPELINE_HPP
#define WORDNICHE_PIPELINE_HPP

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordniche/casestudy.hpp"
#include "wordniche/counting.hpp"
#include "wordniche/dissemination.hpp"
#include "wordniche/dynamics.hpp"
#include "wordniche/importance.hpp"
#include "wordniche/io.hpp"
#include "wordniche/null_models.hpp"
#include "wordniche/synthgen.hpp"
#include "wordniche/trimming.hpp"

namespace wordniche {

inline constexpr const char* kConfigVersion = "wordniche-config v1";

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"ingest", "measures", "bands",     "dhat",  "dynamics",
                                              "importance", "trim",  "casestudy", "synth", "report"};
  return names;
}

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output = "out";
  std::string labels;            ///< word,label CSV; starter list when empty
  std::string tokenizer_config;  ///< JSON file
  std::string synth_params;      ///< JSON file of generator parameters
  std::string epoch;             ///< YYYY-MM-DD; empty: Jan 1 or Jul 1 before the first post
  long window_days = 182;
  bool strip_quoted = true;
  std::string baseline = "poisson";
  std::uint64_t min_count = 6;
  double log10_f_max = -2.52;
  std::string scheme = "global";
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  double band_bin_width = 0.1;
  std::string pairs = "nonoverlap";
  std::size_t lag_windows = 4;
  bool pool = true;
  std::size_t post_length = 0;  ///< 0: median post length
  std::size_t max_per_entity = 10;
  double quiet_years = 2;
  std::size_t min_active_windows = 4;
  std::size_t min_consecutive = 3;
};

/// Calls f(key, field) for every configurable field.
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
  f("input", c.input);
  f("output", c.output);
  f("labels", c.labels);
  f("tokenizer_config", c.tokenizer_config);
  f("synth_params", c.synth_params);
  f("epoch", c.epoch);
  f("window_days", c.window_days);
  f("strip_quoted", c.strip_quoted);
  f("baseline", c.baseline);
  f("min_count", c.min_count);
  f("log10_f_max", c.log10_f_max);
  f("scheme", c.scheme);
  f("replicates", c.replicates);
  f("seed", c.seed);
  f("band_bin_width", c.band_bin_width);
  f("pairs", c.pairs);
  f("lag_windows", c.lag_windows);
  f("pool", c.pool);
  f("post_length", c.post_length);
  f("max_per_entity", c.max_per_entity);
  f("quiet_years", c.quiet_years);
  f("min_active_windows", c.min_active_windows);
  f("min_consecutive", c.min_consecutive);
}

/// Config without the output location, which never affects results.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["version"] = kConfigVersion;
  j["subcommand"] = c.subcommand;
  visit_fields(c, [&](const char* key, const auto& v) {
    if (std::string_view(key) != "output") j[key] = v;
  });
  return j;
}

/// Overrides fields present in j; unknown keys are an error.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "version") {
      if (value != kConfigVersion) throw Error("config: unsupported version " + value.dump());
      continue;
    }
    if (key == "subcommand") continue;
    bool known = false;
    visit_fields(c, [&](const char* k, auto& field) {
      if (key != k) return;
      known = true;
      try {
        value.get_to(field);
      } catch (const nlohmann::json::exception&) {
        throw Error("config: bad value for " + key + ": " + value.dump());
      }
    });
    if (!known) throw Error("config: unknown key " + key);
  }
}

inline void validate(const RunConfig& c) {
  if (std::find(subcommands().begin(), subcommands().end(), c.subcommand) == subcommands().end())
    throw Error("unknown subcommand: " + c.subcommand);
  if (c.subcommand != "synth" && c.input.empty()) throw Error("--input is required");
  if (c.window_days <= 0) throw Error("--window-days must be positive");
  if (!c.epoch.empty() && !parse_timestamp(c.epoch)) throw Error("bad --epoch: " + c.epoch);
  parse_baseline(c.baseline);
  parse_shuffle_kind(c.scheme);
  parse_pair_mode(c.pairs);
  if (c.replicates < 1) throw Error("--replicates must be at least 1");
  if (c.lag_windows < 1) throw Error("--lag-windows must be at least 1");
  if (c.min_count < 1) throw Error("min_count must be at least 1");
  if (c.max_per_entity < 1) throw Error("--max-per-entity must be at least 1");
  if (!(c.band_bin_width > 0)) throw Error("band_bin_width must be positive");
}

struct StageStatus {
  std::string name;
  std::string status;  ///< ok, failed or skipped
  std::vector<std::string> files;
  std::string error;
};

/// Runs one subcommand against the files named in a RunConfig.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::ostream& log = std::cerr) : cfg_(std::move(config)), log_(&log) {
    validate(cfg_);
    stage_seeds_ = {{"bands", stream_seed(cfg_.seed, 1)}, {"trim", stream_seed(cfg_.seed, 2)}};
  }

  /// Returns the process exit status.
  int run() {
    std::filesystem::create_directories(cfg_.output);
    if (cfg_.subcommand == "report") return report();
    run_stage(cfg_.subcommand);
    write_diagnostics();
    return 0;
  }

  [[nodiscard]] const std::vector<StageStatus>& stages() const { return stages_; }

 private:
  using Stage = void (Pipeline::*)();

  static const std::map<std::string, Stage>& stage_table() {
    static const std::map<std::string, Stage> t{
        {"ingest", &Pipeline::stage_ingest},     {"measures", &Pipeline::stage_measures},
        {"bands", &Pipeline::stage_bands},       {"dhat", &Pipeline::stage_dhat},
        {"dynamics", &Pipeline::stage_dynamics}, {"importance", &Pipeline::stage_importance},
        {"trim", &Pipeline::stage_trim},         {"casestudy", &Pipeline::stage_casestudy},
        {"synth", &Pipeline::stage_synth}};
    return t;
  }

  void run_stage(const std::string& name) {
    stage_ = name;
    stages_.push_back({name, "ok", {}, {}});
    (this->*stage_table().at(name))();
  }

  int report() {
    static const char* order[] = {"ingest", "measures", "bands", "dhat", "dynamics", "importance", "trim", "casestudy"};
    bool failed = false;
    for (const char* name : order) {
      try {
        run_stage(name);
      } catch (const std::exception& e) {
        stages_.back().status = "failed";
        stages_.back().error = e.what();
        *log_ << name << ": " << e.what() << '\n';
        failed = true;
        if (!loaded_) {
          for (const char* rest : order)
            if (std::none_of(stages_.begin(), stages_.end(), [&](const StageStatus& s) { return s.name == rest; }))
              stages_.push_back({rest, "skipped", {}, "input not loaded"});
          break;
        }
      }
    }
    write_diagnostics();
    write_manifest();
    return failed ? 1 : 0;
  }

  // ---- inputs -------------------------------------------------------------

  void load() {
    if (loaded_) return;
    const auto text = read_file(cfg_.input);
    input_hash_ = fnv1a_hex(text);
    std::istringstream in(text);
    auto result = ingest(in);
    ingest_report_ = result.report;
    TokenizerConfig tc;
    tc.strip_quoted = cfg_.strip_quoted;
    if (!cfg_.tokenizer_config.empty()) {
      auto j = nlohmann::json::parse(read_file(cfg_.tokenizer_config), nullptr, false);
      if (j.is_discarded()) throw Error("tokenizer config is not valid JSON");
      tc = tokenizer_config_from_json(j);
    }
    corpus_ = tokenize_corpus(result.corpus, tc);
    std::optional<Timestamp> epoch;
    if (!cfg_.epoch.empty()) epoch = parse_timestamp(cfg_.epoch);
    slices_ = partition_windows(corpus_, std::chrono::days{cfg_.window_days}, epoch);
    for (const auto& s : slices_) counts_.push_back(build_counts(s));
    const MeasureOptions opts{parse_baseline(cfg_.baseline), cfg_.min_count, cfg_.log10_f_max};
    for (std::size_t k = 0; k < slices_.size(); ++k)
      tables_.push_back({slices_[k].window, counts_[k].total_tokens, compute_measures(counts_[k], opts)});
    loaded_ = true;
  }

  std::string path(const std::string& name) {
    auto p = (std::filesystem::path(cfg_.output) / name).string();
    stages_.back().files.push_back(name);
    return p;
  }

  void note(const std::string& message) { diagnostics_.emplace_back(stage_, message); }

  void note_all(const Diagnostics& d) {
    for (const auto& m : d) note(m);
  }

  const std::string& word(WordId w) const { return corpus_.words.name(w); }

  static std::string date(Timestamp t) { return format_date(t); }

  // ---- stages -------------------------------------------------------------

  void stage_ingest() {
    load();
    {
      OutputFile f(path("windows.csv"));
      CsvWriter w(f.stream(), "windows",
                  {"window", "start", "center", "end", "posts", "tokens", "users", "threads", "words"});
      for (std::size_t k = 0; k < slices_.size(); ++k) {
        const auto& win = slices_[k].window;
        const auto& c = counts_[k];
        w.row(win.index, date(win.start), date(win.center), date(win.end), slices_[k].posts.size(), c.total_tokens,
              c.num_users(), c.num_threads(), c.num_words());
      }
      f.close();
    }
    {
      OutputFile f(path("word_counts.csv"));
      CsvWriter w(f.stream(), "word_counts", {"window", "word", "N_w", "U_w", "T_w"});
      for (std::size_t k = 0; k < counts_.size(); ++k) {
        const auto& c = counts_[k];
        for (std::size_t i = 0; i < c.num_words(); ++i)
          w.row(k, word(c.words[i]), c.word_counts[i], c.distinct_users(i), c.distinct_threads(i));
      }
      f.close();
    }
    {
      OutputFile f(path("user_tokens.csv"));
      CsvWriter w(f.stream(), "user_tokens", {"window", "user", "m_i"});
      for (std::size_t k = 0; k < counts_.size(); ++k) {
        const auto& c = counts_[k];
        for (std::size_t i = 0; i < c.num_users(); ++i) w.row(k, corpus_.users.name(c.users[i]), c.user_tokens[i]);
      }
      f.close();
    }
    {
      OutputFile f(path("ingest_errors.csv"));
      CsvWriter w(f.stream(), "ingest_errors", {"line", "reason"});
      for (const auto& e : ingest_report_.errors) w.row(e.line, e.reason);
      f.close();
    }
    *log_ << "ingest: " << ingest_report_.accepted << " posts accepted, " << ingest_report_.rejected
          << " rejected, " << slices_.size() << " windows\n";
  }

  void stage_measures() {
    load();
    {
      OutputFile f(path("measures.csv"));
      CsvWriter w(f.stream(), "measures",
                  {"window", "window_center", "word", "N_w", "f", "U_w", "T_w", "U_expected", "T_expected", "D_U",
                   "D_T", "valid"});
      for (const auto& t : tables_)
        for (const auto& m : t.rows)
          w.row(t.window.index, date(t.window.center), word(m.word), m.count, m.frequency, m.users, m.threads,
                m.users_expected, m.threads_expected, m.d_user, m.d_thread, m.valid);
      f.close();
    }
    OutputFile f(path("measures_running.csv"));
    CsvWriter w(f.stream(), "measures_running", {"window", "measure", "log10_f", "n", "p10", "p50", "p90"});
    const RunningOptions opts{0.25, 0.05, 20, {10, 50, 90}};
    for (const auto& t : tables_) {
      std::vector<double> x, du, dt;
      for (const auto& m : t.rows) {
        if (!m.valid) continue;
        x.push_back(m.log10_frequency());
        du.push_back(m.d_user);
        dt.push_back(m.d_thread);
      }
      if (x.empty()) continue;
      for (const auto& [name, y] : {std::pair{"d_user", &du}, std::pair{"d_thread", &dt}})
        for (const auto& p : running_stats(x, *y, opts))
          w.row(t.window.index, name, p.x, p.n, p.values[0], p.values[1], p.values[2]);
    }
    f.close();
  }

  void stage_bands() {
    load();
    OutputFile f(path("bands.csv"));
    CsvWriter w(f.stream(), "bands", {"window", "measure", "bin_center", "p10", "p90", "n"});
    const auto kind = parse_shuffle_kind(cfg_.scheme);
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      if (counts_[k].total_tokens == 0) {
        note("window " + std::to_string(k) + ": empty, no band");
        continue;
      }
      const ShuffleScheme scheme{kind, stream_seed(stage_seeds_.at("bands"), k), cfg_.replicates};
      for (auto entity : {EntityKind::users, EntityKind::threads}) {
        BandOptions opts;
        opts.kind = entity;
        opts.baseline = parse_baseline(cfg_.baseline);
        opts.bin_width = cfg_.band_bin_width;
        opts.min_count = cfg_.min_count;
        auto band = mc_band(counts_[k], scheme, opts);
        const char* name = entity == EntityKind::users ? "d_user" : "d_thread";
        for (const auto& b : band.bins) w.row(k, name, b.center, b.values[0], b.values[1], b.n);
      }
    }
    f.close();
  }

  void stage_dhat() {
    load();
    OutputFile f(path("dhat.csv"));
    CsvWriter w(f.stream(), "dhat", {"window", "word", "N_w", "D_U", "Dhat_U", "D_T", "Dhat_T"});
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      if (counts_[k].total_tokens == 0) continue;
      for (const auto& h : dhat_all(counts_[k], cfg_.min_count)) {
        const auto* m = tables_[k].find(h.word);
        w.row(k, word(h.word), m->count, m->d_user, h.dhat_user, m->d_thread, h.dhat_thread);
      }
    }
    f.close();
  }

  struct Scope {
    std::string name;
    std::vector<FateRecord> records;
  };

  std::vector<WindowPair> window_pairs() {
    PairOptions opts;
    opts.mode = parse_pair_mode(cfg_.pairs);
    opts.lag = cfg_.lag_windows;
    auto pairs = pair_windows(tables_.size(), opts);
    return join_pairs(tables_, pairs);
  }

  static std::string pair_name(const WindowPair& p) {
    return std::to_string(p.t1.index) + "-" + std::to_string(p.t2.index);
  }

  void stage_dynamics() {
    load();
    const auto pairs = window_pairs();
    std::vector<Scope> scopes{{"pooled", pool_records(pairs)}};
    for (const auto& p : pairs) scopes.push_back({pair_name(p), p.records});
    {
      OutputFile f(path("fate_records.csv"));
      CsvWriter w(f.stream(), "fate_records",
                  {"t1", "t2", "word", "N_t1", "N_t2", "log10_f", "d_user", "d_thread", "informative", "survived",
                   "delta_log10_f", "delta_d_user", "delta_d_thread"});
      for (const auto& p : pairs)
        for (const auto& r : p.records)
          w.row(p.t1.index, p.t2.index, word(r.word), r.count_t1, r.count_t2, r.log10_f, r.d_user, r.d_thread,
                r.informative, r.survived, r.delta_log10_f, r.delta_d_user, r.delta_d_thread);
      f.close();
    }
    static const std::pair<const char*, EntityKind> kinds[] = {{"d_user", EntityKind::users},
                                                               {"d_thread", EntityKind::threads}};
    {
      OutputFile f(path("survival.csv"));
      CsvWriter w(f.stream(), "survival", {"scope", "measure", "d_lo", "d_hi", "words", "fallen", "fraction"});
      for (const auto& s : scopes)
        for (auto [name, kind] : kinds)
          for (const auto& b : survival_curve(s.records, kind))
            w.row(s.name, name, b.lo, b.hi, b.words, b.fallen, b.fraction());
      f.close();
    }
    {
      OutputFile f(path("running.csv"));
      CsvWriter w(f.stream(), "running", {"scope", "measure", "d", "n", "p10", "p50", "p90"});
      for (const auto& s : scopes) {
        for (auto [name, kind] : kinds) {
          std::vector<double> x, y;
          for (const auto& r : s.records) {
            if (!r.survived || !r.informative) continue;
            x.push_back(r.d(kind));
            y.push_back(*r.delta_log10_f);
          }
          if (x.empty()) {
            note(s.name + " " + name + ": no surviving words for running statistics");
            continue;
          }
          for (const auto& p : running_stats(x, y)) w.row(s.name, name, p.x, p.n, p.values[0], p.values[1], p.values[2]);
        }
      }
      f.close();
    }
    {
      OutputFile f(path("summary_medians.csv"));
      CsvWriter w(f.stream(), "summary_medians", {"scope", "measure", "target", "n", "median"});
      for (const auto& s : scopes)
        for (auto [name, kind] : kinds) {
          Diagnostics d;
          for (const auto& m : summary_medians(s.records, kind, {}, &d)) w.row(s.name, name, m.target, m.n, m.median);
          for (const auto& msg : d) note(s.name + " " + name + ": " + msg);
        }
      f.close();
    }
    OutputFile f(path("correlations.csv"));
    CsvWriter w(f.stream(), "correlations",
                {"scope", "direction", "log10_f_min", "log10_f_max", "n", "r_user", "r_thread"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& s : scopes) {
      Diagnostics d;
      FreqRangeOptions fopts;
      fopts.log10_f_max = cfg_.log10_f_max;
      const auto range = freq_range(s.records, fopts, &d);
      for (const auto& msg : d) note(s.name + ": " + msg);
      for (auto dir : {Direction::forward, Direction::reversed}) {
        try {
          auto c = delta_correlations(s.records, range, dir);
          w.row(s.name, to_string(dir), range.log10_f_min, range.log10_f_max, c.n, c.r_user, c.r_thread);
        } catch (const Error& e) {
          note(s.name + " " + to_string(dir) + ": " + e.what());
          w.row(s.name, to_string(dir), range.log10_f_min, range.log10_f_max, std::size_t{0}, nan, nan);
        }
      }
    }
    f.close();
  }

  void stage_importance() {
    load();
    const auto pairs = window_pairs();
    std::vector<Scope> scopes;
    if (cfg_.pool) {
      scopes.push_back({"pooled", pool_records(pairs)});
    } else {
      for (const auto& p : pairs) scopes.push_back({pair_name(p), p.records});
    }
    OutputFile f(path("importance.csv"));
    CsvWriter w(f.stream(), "importance",
                {"scope", "predictor", "importance_fraction", "full_r2", "n", "log10_f_min", "log10_f_max"});
    std::size_t fitted = 0;
    std::string last_error;
    for (const auto& s : scopes) {
      Diagnostics d;
      FreqRangeOptions fopts;
      fopts.log10_f_max = cfg_.log10_f_max;
      const auto range = freq_range(s.records, fopts, &d);
      for (const auto& msg : d) note(s.name + ": " + msg);
      try {
        auto imp = kruskal_importance(fate_design(s.records, range));
        for (std::size_t i = 0; i < imp.names.size(); ++i)
          w.row(s.name, imp.names[i], imp.fractions[i], imp.r_squared, imp.n, range.log10_f_min, range.log10_f_max);
        ++fitted;
      } catch (const Error& e) {
        last_error = s.name + ": " + e.what();
        note(last_error);
      }
    }
    f.close();
    if (fitted == 0) throw Error("importance: no scope could be fitted (" + last_error + ")");
  }

  void stage_trim() {
    load();
    TrimParams params;
    params.post_length = cfg_.post_length ? cfg_.post_length : median_post_length(slices_);
    params.max_posts_per_entity = cfg_.max_per_entity;
    std::vector<std::vector<TrimmedWord>> words;
    {
      OutputFile f(path("trim_report.csv"));
      CsvWriter w(f.stream(), "trim_report",
                  {"window", "post_length", "max_per_entity", "posts_in", "removed_short", "removed_duplicate_pair",
                   "removed_cap", "removed_balance", "posts_out", "users", "threads", "ks_distance",
                   "balance_iterations", "balanced"});
      for (std::size_t k = 0; k < slices_.size(); ++k) {
        if (slices_[k].posts.empty()) {
          note("window " + std::to_string(k) + ": empty, not trimmed");
          words.emplace_back();
          continue;
        }
        params.seed = stream_seed(stage_seeds_.at("trim"), k);
        auto t = trim_window(slices_[k], params);
        const auto& r = t.report;
        w.row(k, params.post_length, params.max_posts_per_entity, r.posts_in, r.removed_short,
              r.removed_duplicate_pair, r.removed_cap, r.removed_balance, r.posts_out, r.users, r.threads,
              r.ks_distance, r.iterations, r.balanced);
        if (!r.balanced) note("window " + std::to_string(k) + ": balancing stopped at the iteration limit");
        words.push_back(trimmed_words(build_counts(t.slice), cfg_.min_count));
      }
      f.close();
    }
    Diagnostics d;
    auto corr = trimmed_correlations(words, 30, &d);
    note_all(d);
    {
      OutputFile f(path("trim_correlations.csv"));
      CsvWriter w(f.stream(), "trim_correlations", {"scope", "pair", "r"});
      for (const auto& p : corr.pairs) {
        for (std::size_t i = 0; i < corr.windows.size(); ++i)
          w.row(std::to_string(corr.windows[i]), p.name, p.per_window[i]);
        w.row("mean", p.name, p.mean);
        w.row("sd", p.name, p.sd);
      }
      f.close();
    }
    OutputFile f(path("trim_summary.csv"));
    CsvWriter w(f.stream(), "trim_summary", {"measure", "n", "p12_5", "p25", "p50", "p75", "p87_5", "below_0_4"});
    for (const auto& r : dissemination_summary(words))
      w.row(r.measure, r.box.n, r.box.p12_5, r.box.p25, r.box.p50, r.box.p75, r.box.p87_5, r.below_0_4);
    f.close();
  }

  std::map<std::string, std::string> labels() {
    if (cfg_.labels.empty()) return starter_labels();
    std::istringstream in(read_file(cfg_.labels));
    return parse_labels(in);
  }

  void stage_casestudy() {
    load();
    RisingOptions ropts;
    ropts.quiet_years = cfg_.quiet_years;
    ropts.min_active_windows = cfg_.min_active_windows;
    ropts.min_consecutive = cfg_.min_consecutive;
    const auto rising = detect_rising(tables_, ropts);
    const auto label_map = labels();

    // Rising words, then labeled words observed in the corpus, each once.
    std::vector<WordId> chosen(rising.begin(), rising.end());
    for (const auto& [w, label] : label_map)
      if (corpus_.words.contains(w)) chosen.push_back(corpus_.words.at(w));
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

    std::vector<TrajectorySeries> series;
    for (auto id : chosen) {
      auto s = trajectory(id, tables_);
      if (auto it = label_map.find(word(id)); it != label_map.end()) s.label = it->second;
      series.push_back(std::move(s));
    }
    {
      OutputFile f(path("rising.csv"));
      CsvWriter w(f.stream(), "rising", {"word", "label", "first_valid_window", "peak_window"});
      for (auto id : rising) {
        auto it = std::find_if(series.begin(), series.end(), [&](const TrajectorySeries& s) { return s.word == id; });
        w.row(word(id), it->label, it->rising_period->first, it->rising_period->second);
      }
      f.close();
    }
    const auto totals = total_tokens_series(tables_);
    {
      OutputFile f(path("trajectory.csv"));
      CsvWriter w(f.stream(), "trajectory",
                  {"word", "label", "window", "window_center", "N_w", "f", "D_U", "D_T", "valid"});
      for (const auto& s : series)
        for (const auto& p : s.points)
          w.row(word(s.word), s.label, p.window, date(p.center), p.count, p.frequency, p.d_user, p.d_thread, p.valid);
      f.close();
    }
    {
      OutputFile f(path("normalized.csv"));
      CsvWriter w(f.stream(), "normalized", {"word", "label", "window", "window_center", "normalized_N_w", "N_A"});
      for (const auto& s : series) {
        auto norm = normalized_occurrences(s);
        for (std::size_t k = 0; k < s.points.size(); ++k)
          w.row(word(s.word), s.label, s.points[k].window, date(s.points[k].center), norm[k], totals[k]);
      }
      f.close();
    }
    std::map<std::string, std::vector<TrajectorySeries>> cohorts;
    for (const auto& s : series) cohorts[s.label.empty() ? "unlabeled" : s.label].push_back(s);
    OutputFile f(path("cohort.csv"));
    CsvWriter w(f.stream(), "cohort",
                {"cohort", "scope", "measure", "words", "p12_5", "p25", "p50", "p75", "p87_5"});
    for (const auto& [name, members] : cohorts) {
      for (auto scope : {CohortScope::all_windows, CohortScope::rising_period}) {
        Diagnostics d;
        auto c = cohort_stats(members, scope, &d);
        for (const auto& msg : d) note("cohort " + name + ": " + msg);
        for (const auto& [measure, b] :
             {std::pair{"f", &c.frequency}, std::pair{"d_user", &c.d_user}, std::pair{"d_thread", &c.d_thread}})
          w.row(name, to_string(scope), measure, b->n, b->p12_5, b->p25, b->p50, b->p75, b->p87_5);
      }
    }
    f.close();
    *log_ << "casestudy: " << rising.size() << " rising words, " << series.size() << " trajectories\n";
  }

  void stage_synth() {
    GenParams p;
    p.seed = cfg_.seed;
    if (!cfg_.synth_params.empty()) {
      auto j = nlohmann::json::parse(read_file(cfg_.synth_params), nullptr, false);
      if (j.is_discarded()) throw Error("synth params are not valid JSON");
      if (!j.contains("seed")) j["seed"] = cfg_.seed;
      p = gen_params_from_json(j);
    }
    auto g = generate(p);
    {
      OutputFile f(path("posts.jsonl"));
      for (const auto& post : g.corpus.posts) f.stream() << to_record(post) << '\n';
      f.close();
    }
    {
      OutputFile f(path("synth_manifest.json"));
      f.stream() << g.manifest.dump(2) << '\n';
      f.close();
    }
    OutputFile f(path("labels.csv"));
    CsvWriter w(f.stream(), "labels", {"word", "label"});
    for (const auto& e : g.manifest["words"])
      if (e["riser"].is_string() && !e["riser"].get<std::string>().empty())
        w.row(e["word"].get<std::string>(), e["riser"].get<std::string>());
    f.close();
    *log_ << "synth: " << g.corpus.posts.size() << " posts in " << p.windows << " windows\n";
  }

  // ---- bookkeeping --------------------------------------------------------

  void write_diagnostics() {
    stage_ = "diagnostics";
    OutputFile f((std::filesystem::path(cfg_.output) / "diagnostics.csv").string());
    CsvWriter w(f.stream(), "diagnostics", {"stage", "message"});
    for (const auto& [stage, msg] : diagnostics_) w.row(stage, msg);
    f.close();
  }

  void write_manifest() {
    nlohmann::ordered_json m;
    m["format"] = "wordniche-report v1";
    auto config = to_json(cfg_);
    m["config_hash"] = fnv1a_hex(config.dump());
    m["config"] = std::move(config);
    m["input_hash"] = input_hash_;
    m["seeds"] = {{"base", cfg_.seed}, {"bands", stage_seeds_.at("bands")}, {"trim", stage_seeds_.at("trim")}};
    m["ingest"] = {{"records", ingest_report_.records},
                   {"accepted", ingest_report_.accepted},
                   {"rejected", ingest_report_.rejected},
                   {"malformed", ingest_report_.malformed},
                   {"windows", slices_.size()}};
    m["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages_) {
      nlohmann::ordered_json e;
      e["name"] = s.name;
      e["status"] = s.status;
      e["files"] = s.files;
      if (!s.error.empty()) e["error"] = s.error;
      m["stages"].push_back(std::move(e));
    }
    m["diagnostics"] = diagnostics_.size();
    OutputFile f((std::filesystem::path(cfg_.output) / "manifest.json").string());
    f.stream() << m.dump(2) << '\n';
    f.close();
  }

  RunConfig cfg_;
  std::ostream* log_;
  std::map<std::string, std::uint64_t> stage_seeds_;
  std::string stage_;
  std::vector<StageStatus> stages_;
  std::vector<std::pair<std::string, std::string>> diagnostics_;

  bool loaded_ = false;
  std::string input_hash_;
  IngestReport ingest_report_;
  TokenizedCorpus corpus_;
  std::vector<WindowSlice> slices_;
  std::vector<WindowCounts> counts_;
  std::vector<MeasureTable> tables_;
};

inline int run(const RunConfig& config, std::ostream& log = std::cerr) { return Pipeline(config, log).run(); }

}  // namespace wordniche

#endif
