// Acceptance criteria, one PASS/FAIL line each. Exit status is nonzero if any fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "wordniche/casestudy.hpp"
#include "wordniche/importance.hpp"
#include "wordniche/null_models.hpp"
#include "wordniche/pipeline.hpp"
#include "wordniche/synthgen.hpp"
#include "wordniche/trimming.hpp"

using namespace wordniche;
using wordniche::testing::counts_from;
using wordniche::testing::PostSpec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// Every synthetic window built below is also checked against the D bounds.
struct BoundsLedger {
  std::size_t windows = 0;
  std::size_t words = 0;
  std::size_t violations = 0;
  std::string first;

  void check(const WindowCounts& c) {
    if (c.total_tokens == 0) return;
    ++windows;
    for (auto b : {Baseline::exact, Baseline::poisson}) {
      for (const auto& m : compute_measures(c, {b, 6, -2.52})) {
        if (!m.valid) continue;
        ++words;
        const double lo = 1.0 / static_cast<double>(m.count);
        const double eps = 1e-12;
        const bool ok = m.d_user >= lo - eps && m.d_thread >= lo - eps && m.d_user <= m.d_user_max + eps &&
                        m.d_thread <= m.d_thread_max + eps;
        if (!ok) {
          ++violations;
          if (first.empty())
            first = "word " + std::to_string(m.word) + " D^U=" + fmt(m.d_user) + " D^T=" + fmt(m.d_thread);
        }
      }
    }
  }
};

BoundsLedger bounds;

std::vector<WindowSlice> slices_of(const GenParams& p) {
  auto tc = tokenize_corpus(generate(p).corpus);
  return partition_windows(tc, p.window_length, p.start);
}

std::vector<WindowCounts> counts_of(const GenParams& p) {
  std::vector<WindowCounts> out;
  for (const auto& s : slices_of(p)) {
    out.push_back(build_counts(s));
    bounds.check(out.back());
  }
  return out;
}

// ---- criteria ---------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937 eng(2024);
  std::uniform_int_distribution<int> n_posts(1, 5), len(1, 3), pick(0, 3);
  std::size_t corpora = 0, compared = 0;
  double worst = 0;
  while (corpora < 150) {
    std::vector<PostSpec> posts;
    for (int k = n_posts(eng); k > 0; --k) {
      PostSpec s{static_cast<EntityId>(pick(eng)), static_cast<EntityId>(pick(eng)), {}};
      for (int j = len(eng); j > 0; --j) s.tokens.push_back(static_cast<WordId>(pick(eng)));
      posts.push_back(std::move(s));
    }
    auto c = counts_from(posts);
    if (c.total_tokens > 12) continue;
    ++corpora;
    DisseminationModel model(c);
    for (std::size_t w = 0; w < c.num_words(); ++w) {
      const auto n = c.word_counts[w];
      const auto n32 = static_cast<unsigned>(n);
      worst = std::max(worst, std::abs(model.expected(EntityKind::users, n, Baseline::exact) -
                                       oracle::enumerate_expected_entities(c.user_tokens, n32)));
      worst = std::max(worst, std::abs(model.expected(EntityKind::threads, n, Baseline::exact) -
                                       oracle::enumerate_expected_entities(c.thread_tokens, n32)));
      compared += 2;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, std::to_string(corpora) + " corpora, " + std::to_string(compared) +
                                            " comparisons, max |diff| " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome worked_example() {
  // Users 1 and 2 hold two tokens each; the word occurs twice.
  auto clumped = counts_from({{1, 1, {7, 7}}, {2, 1, {3, 4}}});
  auto spread = counts_from({{1, 1, {7, 3}}, {2, 1, {7, 4}}});
  auto a = dissemination_measure(clumped, 7, EntityKind::users, Baseline::exact);
  auto b = dissemination_measure(spread, 7, EntityKind::users, Baseline::exact);
  const bool ok = std::abs(a.expected - 5.0 / 3.0) < 1e-15 && std::abs(b.expected - 5.0 / 3.0) < 1e-15 &&
                  std::abs(a.value - 0.6) < 1e-15 && std::abs(b.value - 1.2) < 1e-15;
  return {ok, "U~=" + fmt(a.expected) + ", D^U in {" + fmt(a.value) + ", " + fmt(b.value) + "}"};
}

Outcome poisson_regime() {
  GenParams p;
  p.users = 5000;
  p.threads_per_window = 5000;
  p.user_exponent = 0;
  p.thread_exponent = 0;
  p.posts_per_window = 60000;
  p.tokens_per_window = 600000;
  p.vocabulary = 20000;
  p.windows = 1;
  p.seed = 3;
  auto c = counts_of(p).front();
  const auto na = static_cast<double>(c.total_tokens);
  double max_share = 0;
  for (auto v : {&c.user_tokens, &c.thread_tokens})
    for (auto m : *v) max_share = std::max(max_share, static_cast<double>(m) / na);
  DisseminationModel model(c);
  double worst = 0;
  std::size_t words = 0;
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    const auto n = c.word_counts[w];
    if (static_cast<double>(n) / na >= 1e-3) continue;
    ++words;
    for (auto kind : {EntityKind::users, EntityKind::threads}) {
      const double exact = model.expected(kind, n, Baseline::exact);
      const double pois = model.expected(kind, n, Baseline::poisson);
      worst = std::max(worst, std::abs(exact - pois) / exact);
    }
  }
  const bool ok = max_share < 1e-3 && words > 1000 && worst < 1e-3;
  return {ok, std::to_string(words) + " words with f < 1e-3, max m_i/N_A " + fmt(max_share) +
                  ", max relative difference " + fmt(worst)};
}

Outcome null_calibration() {
  GenParams p;
  p.users = 2000;
  p.threads_per_window = 2000;
  p.user_exponent = 0.5;
  p.thread_exponent = 0.5;
  p.posts_per_window = 5000;
  p.tokens_per_window = 100000;
  p.windows = 1;
  p.seed = 1;
  auto c = counts_of(p).front();
  const auto t0 = Clock::now();
  auto s = null_dissemination(c, {ShuffleKind::global, 17, 100}, Baseline::exact);
  const double secs = seconds_since(t0);
  std::size_t words = 0, outside = 0;
  double worst = 0;
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    if (c.word_counts[w] < 20) continue;
    ++words;
    for (double v : {s.mean_d_user[w], s.mean_d_thread[w]}) {
      worst = std::max(worst, std::abs(v - 1));
      if (v < 0.98 || v > 1.02) ++outside;
    }
  }
  return {outside == 0 && words > 0 && secs < 60.0,
          std::to_string(c.total_tokens) + " tokens, " + std::to_string(words) + " words with N_w >= 20, " +
              std::to_string(outside) + " means outside [0.98, 1.02], max |mean - 1| " + fmt(worst) + ", " +
              fmt(secs) + " s"};
}

Outcome conditional_oracle() {
  std::size_t compared = 0, failures = 0;
  double worst_z = 0;
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    // Three users by three threads with uneven cells; words drawn from four types.
    std::mt19937 eng(seed);
    std::uniform_int_distribution<int> cell(0, 6);
    std::uniform_int_distribution<WordId> word(0, 3);
    std::vector<PostSpec> posts;
    for (EntityId u = 0; u < 3; ++u)
      for (EntityId t = 0; t < 3; ++t) {
        PostSpec s{u, t, {}};
        for (int k = cell(eng); k > 0; --k) s.tokens.push_back(word(eng));
        if (!s.tokens.empty()) posts.push_back(std::move(s));
      }
    auto c = counts_from(posts);
    for (auto mode : {ConditionalMode::users_within_threads, ConditionalMode::threads_within_users}) {
      auto analytic = conditional_expected_analytic(c, mode);
      auto mc = conditional_expected_mc(c, mode, seed, 10000);
      for (std::size_t w = 0; w < c.num_words(); ++w) {
        ++compared;
        const double diff = std::abs(analytic[w] - mc[w].value);
        const double se = mc[w].standard_error;
        if (se == 0) {
          if (diff > 1e-12) ++failures;
        } else {
          worst_z = std::max(worst_z, diff / se);
          if (diff > 3 * se) ++failures;
        }
      }
    }
  }

  // Every thread written by a single user.
  std::vector<PostSpec> posts;
  std::mt19937 eng(6);
  std::geometric_distribution<WordId> word(0.3);
  for (EntityId t = 0; t < 40; ++t) {
    PostSpec s{t % 9, t, {}};
    for (int k = 0; k < 15; ++k) s.tokens.push_back(word(eng));
    posts.push_back(std::move(s));
  }
  auto rows = dhat_all(counts_from(posts));
  std::size_t not_one = 0;
  for (const auto& r : rows)
    if (r.dhat_user != 1.0) ++not_one;

  return {failures == 0 && !rows.empty() && not_one == 0,
          std::to_string(compared) + " comparisons on 20 corpora, " + std::to_string(failures) +
              " beyond 3 SE (max z " + fmt(worst_z) + "); single-user threads: " + std::to_string(rows.size()) +
              " words, " + std::to_string(not_one) + " with D^U-hat != 1"};
}

Outcome residual_idf_identity() {
  double worst = 0;
  std::size_t words = 0;
  for (std::uint32_t seed = 1; seed <= 5; ++seed) {
    std::mt19937 eng(seed);
    std::geometric_distribution<WordId> word(0.05);
    std::uniform_int_distribution<EntityId> user(0, 29);
    std::vector<PostSpec> posts;
    for (EntityId t = 0; t < 200; ++t) {
      PostSpec s{user(eng), t, {}};
      for (int k = 0; k < 50; ++k) s.tokens.push_back(word(eng));
      posts.push_back(std::move(s));
    }
    auto c = counts_from(posts);
    for (std::size_t w = 0; w < c.num_words(); ++w) {
      if (c.word_counts[w] < 6) continue;
      ++words;
      auto d = dissemination_measure(c, c.words[w], EntityKind::threads, Baseline::poisson);
      worst = std::max(worst, std::abs(-std::log(d.value) - residual_idf(c, c.words[w])));
    }
  }
  return {words > 0 && worst < 1e-9, std::to_string(words) + " valid words, max |diff| " + fmt(worst)};
}

std::vector<double> walsh(std::size_t k, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::popcount(i & k) % 2 ? -1.0 : 1.0;
  return v;
}

Outcome kruskal_properties() {
  // Sum to full R^2 on correlated designs.
  double sum_err = 0;
  for (std::uint32_t seed = 1; seed <= 10; ++seed) {
    std::mt19937 eng(seed);
    std::normal_distribution<double> z(0, 1);
    RegressionDesign d{{"a", "b", "c", "e"}, {{}, {}, {}, {}}, {}};
    for (int i = 0; i < 300; ++i) {
      double a = z(eng), b = 0.6 * a + z(eng), c = z(eng) - 0.3 * b, e = 0.2 * a + z(eng);
      d.predictors[0].push_back(a);
      d.predictors[1].push_back(b);
      d.predictors[2].push_back(c);
      d.predictors[3].push_back(e);
      d.response.push_back(0.8 * a - 0.5 * b + 0.2 * c + 0.1 * e + z(eng));
    }
    auto imp = kruskal_importance(d);
    double total = 0;
    for (double f : imp.fractions) total += f;
    sum_err = std::max(sum_err, std::abs(total - ols_fit(d).r_squared));
  }

  // Orthogonal design: Walsh columns, so each share is beta_k^2 Var(x_k) / Var(y).
  const std::size_t n = 128;
  const std::vector<double> beta{1.5, -0.7, 0.2, 0.05};
  const double sigma = 0.9;
  RegressionDesign orth;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    orth.names.push_back("x" + std::to_string(k));
    orth.predictors.push_back(walsh(k + 1, n));
  }
  const auto noise = walsh(37, n);
  double var_y = sigma * sigma;
  for (double b : beta) var_y += b * b;
  for (std::size_t i = 0; i < n; ++i) {
    double y = sigma * noise[i];
    for (std::size_t k = 0; k < beta.size(); ++k) y += beta[k] * orth.predictors[k][i];
    orth.response.push_back(y);
  }
  auto oimp = kruskal_importance(orth);
  double orth_err = 0;
  for (std::size_t k = 0; k < beta.size(); ++k)
    orth_err = std::max(orth_err, std::abs(oimp.fractions[k] - beta[k] * beta[k] / var_y));

  // Planted fate data: the change depends mostly on D^U, weakly on log10 f.
  std::mt19937 eng(42);
  std::normal_distribution<double> z(0, 1);
  RegressionDesign planted{{"d_user", "d_thread", "log10_f"}, {{}, {}, {}}, {}};
  for (int i = 0; i < 3000; ++i) {
    double du = 0.8 + 0.2 * z(eng);
    double dt = 0.6 * du + 0.1 * z(eng);
    double lf = -4 + 0.5 * z(eng);
    planted.predictors[0].push_back(du);
    planted.predictors[1].push_back(dt);
    planted.predictors[2].push_back(lf);
    planted.response.push_back(0.5 * du + 0.05 * lf + 0.1 * z(eng));
  }
  auto pimp = kruskal_importance(planted);
  const auto& f = pimp.fractions;
  const bool ordered = f[0] > f[1] && f[1] > f[2];

  return {sum_err <= 1e-10 && orth_err <= 1e-6 && ordered,
          "sum error " + fmt(sum_err) + ", orthogonal error " + fmt(orth_err) + ", planted shares D^U " +
              fmt(f[0]) + " D^T " + fmt(f[1]) + " log10 f " + fmt(f[2])};
}

Outcome fate_planted_effect() {
  // Flat activity and a flat vocabulary so D^U tracks theta_U closely. Every word is
  // damped at t2 by 0.056 (theta_U / 4.5)^0.58, hardest for the most clumped words,
  // and each word's expected count drifts by a mean-one lognormal factor.
  GenParams p;
  p.users = 500;
  p.threads_per_window = 500;
  p.user_exponent = 0.5;
  p.thread_exponent = 0.5;
  p.vocabulary = 6000;
  p.zipf_exponent = 0;
  p.tokens_per_window = 500.0 * 6000;
  p.posts_per_window = 30000;
  p.windows = 2;
  p.theta_user = {0.05, 4.5};
  p.fate_rules.push_back({1, 4.5, 0.056, 0.58});
  p.drift_sd = 0.8;
  p.seed = 1;
  auto slices = slices_of(p);
  std::vector<MeasureTable> tables;
  for (const auto& s : slices) {
    bounds.check(build_counts(s));
    tables.push_back(measure_window(s, {Baseline::exact, 6, -2.52}));
  }
  auto pair = join_pair(tables[0], tables[1]);
  auto bins = survival_curve(pair.records, EntityKind::users);
  bool strict = bins.size() >= 3;
  std::string curve;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i > 0 && !(bins[i].fraction() < bins[i - 1].fraction())) strict = false;
    curve += (i ? " " : "") + fmt(bins[i].lo) + ":" + fmt(std::round(bins[i].fraction() * 1000) / 1000);
  }
  auto med = summary_medians(pair.records, EntityKind::users);
  std::optional<double> low, high;
  for (const auto& m : med) {
    if (std::abs(m.target - 0.4) < 1e-9) low = m.median;
    if (std::abs(m.target - 1.0) < 1e-9) high = m.median;
  }
  const bool gap = low && high && *high - *low >= 0.1;

  auto self = join_pair(tables[0], tables[0]);
  std::size_t nonzero = 0;
  for (const auto& r : self.records)
    if (r.survived && (*r.delta_log10_f != 0 || *r.delta_d_user != 0 || *r.delta_d_thread != 0)) ++nonzero;

  return {strict && gap && nonzero == 0,
          std::to_string(bins.size()) + " populated bins, fallen fraction " + curve + (strict ? "" : " (not strict)") +
              "; median at D=0.4 " + (low ? fmt(*low) : "NA") + ", at D=1.0 " + (high ? fmt(*high) : "NA") +
              "; self-pair nonzero deltas " + std::to_string(nonzero)};
}

std::string serialize(const WindowSlice& s) {
  std::ostringstream out;
  for (const auto& p : s.posts) {
    out << p.post << ' ' << p.user << ' ' << p.thread << ' ' << p.timestamp.time_since_epoch().count();
    for (auto t : p.tokens) out << ' ' << t;
    out << '\n';
  }
  return out.str();
}

Outcome trimming_postconditions() {
  GenParams p;
  p.users = 600;
  p.threads_per_window = 500;
  p.posts_per_window = 5000;
  p.tokens_per_window = 100000;
  p.user_exponent = 1.1;
  p.thread_exponent = 0.9;
  p.length_shape = 0.8;
  p.vocabulary = 2000;
  p.windows = 3;
  p.seed = 5;
  auto slices = slices_of(p);
  TrimParams params;
  params.post_length = median_post_length(slices);
  std::size_t violations = 0, differing = 0, posts = 0;
  std::string first;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    bounds.check(build_counts(slices[k]));
    params.seed = stream_seed(99, k);
    auto a = trim_window(slices[k], params);
    auto b = trim_window(slices[k], params);
    posts += a.slice.posts.size();
    if (auto v = trim_violation(a.slice, params)) {
      ++violations;
      if (first.empty()) first = *v;
    }
    if (serialize(a.slice) != serialize(b.slice)) ++differing;
  }
  return {violations == 0 && differing == 0 && posts > 0,
          std::to_string(slices.size()) + " windows, L=" + std::to_string(params.post_length) + ", " +
              std::to_string(posts) + " posts kept, " + std::to_string(violations) + " violating" +
              (first.empty() ? "" : " (" + first + ")") + ", " + std::to_string(differing) + " not reproducible"};
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path().string());
  return out;
}

Outcome report_determinism() {
  GenParams p;
  p.windows = 9;
  p.posts_per_window = 1000;
  p.tokens_per_window = 20000;
  p.vocabulary = 1500;
  p.theta_user = {0.3, 30};
  p.risers.push_back({4, 5, 12, 1.4, 0.1, 0.1, "P"});
  p.risers.push_back({4, 5, 12, 1.4, kInf, kInf, "S"});
  p.seed = 8;
  auto gen = generate(p);

  const auto root = std::filesystem::temp_directory_path() / ("wordniche_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const auto input = (root / "posts.jsonl").string();
  {
    OutputFile f(input);
    for (const auto& post : gen.corpus.posts) f.stream() << to_record(post) << '\n';
    f.close();
  }
  std::ostringstream log;
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    RunConfig cfg;
    cfg.subcommand = "report";
    cfg.input = input;
    cfg.output = (root / ("run" + std::to_string(run))).string();
    cfg.seed = 4;
    codes[run] = Pipeline(cfg, log).run();
  }
  auto a = read_tree(root / "run0");
  auto b = read_tree(root / "run1");
  std::size_t differing = 0;
  for (const auto& [name, body] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != body) ++differing;
  }
  if (a.size() != b.size()) ++differing;
  std::filesystem::remove_all(root);
  return {codes[0] == 0 && codes[1] == 0 && differing == 0 && a.size() > 10,
          std::to_string(a.size()) + " files, " + std::to_string(differing) + " differing, exit codes " +
              std::to_string(codes[0]) + "/" + std::to_string(codes[1])};
}

Outcome throughput() {
  GenParams p;
  p.windows = 4;
  p.posts_per_window = 12500;
  p.tokens_per_window = 250000;
  p.vocabulary = 20000;
  p.seed = 12;
  auto gen = generate(p);
  std::string jsonl;
  for (const auto& post : gen.corpus.posts) jsonl += to_record(post) + '\n';

  const auto t0 = Clock::now();
  std::istringstream in(jsonl);
  auto ingested = ingest(in);
  auto tc = tokenize_corpus(ingested.corpus);
  auto slices = partition_windows(tc, p.window_length, p.start);
  std::size_t tokens = 0, rows = 0;
  std::vector<WindowCounts> counts;
  for (const auto& s : slices) {
    counts.push_back(build_counts(s));
    tokens += counts.back().total_tokens;
    rows += compute_measures(counts.back(), {Baseline::exact, 6, -2.52}).size();
  }
  const double secs = seconds_since(t0);
  for (const auto& c : counts) bounds.check(c);
  return {tokens >= 1000000 && secs < 30.0,
          std::to_string(tokens) + " tokens, " + std::to_string(rows) + " measure rows, " + fmt(secs) + " s"};
}

Outcome bounds_suite() {
  return {bounds.windows > 0 && bounds.violations == 0,
          std::to_string(bounds.windows) + " synthetic windows, " + std::to_string(bounds.words) +
              " word measurements, " + std::to_string(bounds.violations) + " violations" +
              (bounds.first.empty() ? "" : " (" + bounds.first + ")")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"baseline oracle equivalence", oracle_equivalence},
      {"worked example", worked_example},
      {"poisson approximation regime", poisson_regime},
      {"null calibration", null_calibration},
      {"conditional baseline oracle", conditional_oracle},
      {"r-IDF identity", residual_idf_identity},
      {"kruskal properties", kruskal_properties},
      {"fate planted effect", fate_planted_effect},
      {"trimming postconditions", trimming_postconditions},
      {"end-to-end determinism", report_determinism},
      {"throughput", throughput},
      {"bounds suite", bounds_suite},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
