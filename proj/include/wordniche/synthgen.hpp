#ifndef WORDNICHE_SYNTHGEN_HPP
#define WORDNICHE_SYNTHGEN_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordniche/corpus.hpp"
#include "wordniche/windows.hpp"

namespace wordniche {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-word concentration drawn log-uniformly from [lo, hi]; lo = hi = inf
/// gives uniform placement.
struct ThetaRange {
  double lo = kInf;
  double hi = kInf;
};

/// Scales expected counts of words with theta_user < theta_user_below from
/// from_window on by factor * (theta_user / theta_user_below)^slope.
struct FateRule {
  std::size_t from_window = 1;
  double theta_user_below = 0.5;
  double factor = 0.1;
  double slope = 0;
};

/// A group of words absent before start_window, then expected
/// base_count * growth^(k - start_window) occurrences in window k.
struct RiserSpec {
  std::size_t count = 0;
  std::size_t start_window = 4;
  double base_count = 20;
  double growth = 1.3;
  double theta_user = kInf;
  double theta_thread = kInf;
  std::string label;
};

struct GenParams {
  std::size_t users = 500;
  std::size_t threads_per_window = 400;
  std::size_t windows = 2;
  std::size_t posts_per_window = 3000;
  double tokens_per_window = 60000;  ///< expected, before fate rules
  double user_exponent = 1.0;        ///< authorship weight of the r-th user, (r + 1)^-a
  double thread_exponent = 0.8;
  double length_shape = 2.0;  ///< gamma shape of the per-post length propensity
  std::size_t vocabulary = 3000;
  double zipf_exponent = 1.0;
  ThetaRange theta_user;
  ThetaRange theta_thread;
  std::vector<FateRule> fate_rules;
  std::vector<RiserSpec> risers;  ///< taken from the rare end of the vocabulary
  /// Log-scale sd of a mean-one lognormal multiplier drawn per word and window
  /// from window 1 on; 0 keeps expected counts fixed.
  double drift_sd = 0;
  std::uint64_t seed = 1;
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{1994} / 1 / 1}};
  std::chrono::seconds window_length = kHalfYear;
};

struct Generated {
  Corpus corpus;
  nlohmann::ordered_json manifest;
};

namespace detail {

inline nlohmann::json theta_json(double t) { return std::isinf(t) ? nlohmann::json("inf") : nlohmann::json(t); }

inline double theta_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw Error("theta must be a number or \"inf\"");
  }
  return j.get<double>();
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return stream_seed(stream_seed(stream_seed(seed, a), b), c);
}

enum : std::uint64_t { kThetaStream = 1, kUserAffinity, kThreadAffinity, kStructure, kPlacement, kOrder, kDrift };

inline double affinity(double theta, std::uint64_t seed) {
  if (std::isinf(theta)) return 1.0;
  SplitMix64 eng(seed);
  return std::gamma_distribution<double>(theta, 1.0)(eng) / theta;
}

inline void check_theta_range(const ThetaRange& r, const char* what) {
  const bool both_inf = std::isinf(r.lo) && std::isinf(r.hi);
  if (both_inf) return;
  if (!(r.lo > 0) || std::isinf(r.lo) || std::isinf(r.hi) || r.hi < r.lo)
    throw Error(std::string(what) + ": need 0 < lo <= hi < inf, or lo = hi = inf");
}

}  // namespace detail

inline void validate(const GenParams& p) {
  if (p.users < 1 || p.threads_per_window < 1 || p.windows < 1 || p.posts_per_window < 1 || p.vocabulary < 1)
    throw Error("synth: users, threads, windows, posts and vocabulary must be at least 1");
  if (!(p.tokens_per_window > 0)) throw Error("synth: tokens_per_window must be positive");
  if (!(p.drift_sd >= 0)) throw Error("synth: drift_sd must be non-negative");
  for (double e : {p.user_exponent, p.thread_exponent, p.zipf_exponent})
    if (!(e >= 0 && e <= 5)) throw Error("synth: exponents must lie in [0, 5]");
  if (!(p.length_shape > 0)) throw Error("synth: length_shape must be positive");
  if (p.window_length.count() <= 0) throw Error("synth: window length must be positive");
  detail::check_theta_range(p.theta_user, "theta_user");
  detail::check_theta_range(p.theta_thread, "theta_thread");
  std::size_t riser_words = 0;
  for (const auto& r : p.risers) {
    riser_words += r.count;
    if (r.start_window >= p.windows) throw Error("synth: riser start_window beyond the last window");
    if (!(r.base_count > 0) || !(r.growth > 0)) throw Error("synth: riser base_count and growth must be positive");
    if (!(r.theta_user > 0) || !(r.theta_thread > 0)) throw Error("synth: riser theta must be positive");
  }
  if (riser_words > p.vocabulary)
    throw Error("synth: vocabulary of " + std::to_string(p.vocabulary) + " cannot hold " +
                std::to_string(riser_words) + " risers");
  for (const auto& f : p.fate_rules)
    if (!(f.factor >= 0) || !(f.theta_user_below > 0)) throw Error("synth: invalid fate rule");
}

inline nlohmann::ordered_json to_json(const GenParams& p) {
  nlohmann::ordered_json j;
  j["users"] = p.users;
  j["threads_per_window"] = p.threads_per_window;
  j["windows"] = p.windows;
  j["posts_per_window"] = p.posts_per_window;
  j["tokens_per_window"] = p.tokens_per_window;
  j["user_exponent"] = p.user_exponent;
  j["thread_exponent"] = p.thread_exponent;
  j["length_shape"] = p.length_shape;
  j["vocabulary"] = p.vocabulary;
  j["zipf_exponent"] = p.zipf_exponent;
  j["theta_user"] = {detail::theta_json(p.theta_user.lo), detail::theta_json(p.theta_user.hi)};
  j["theta_thread"] = {detail::theta_json(p.theta_thread.lo), detail::theta_json(p.theta_thread.hi)};
  j["fate_rules"] = nlohmann::ordered_json::array();
  for (const auto& f : p.fate_rules)
    j["fate_rules"].push_back({{"from_window", f.from_window},
                               {"theta_user_below", f.theta_user_below},
                               {"factor", f.factor},
                               {"slope", f.slope}});
  j["risers"] = nlohmann::ordered_json::array();
  for (const auto& r : p.risers)
    j["risers"].push_back({{"count", r.count},
                           {"start_window", r.start_window},
                           {"base_count", r.base_count},
                           {"growth", r.growth},
                           {"theta_user", detail::theta_json(r.theta_user)},
                           {"theta_thread", detail::theta_json(r.theta_thread)},
                           {"label", r.label}});
  j["drift_sd"] = p.drift_sd;
  j["seed"] = p.seed;
  j["start"] = format_timestamp(p.start);
  j["window_days"] = std::chrono::duration_cast<std::chrono::days>(p.window_length).count();
  return j;
}

/// Missing keys keep their defaults.
inline GenParams gen_params_from_json(const nlohmann::json& j) {
  GenParams p;
  auto get = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) field = it->get<std::remove_reference_t<decltype(field)>>();
  };
  auto range = [&](const char* key, ThetaRange& r) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array() || it->size() != 2) throw Error(std::string(key) + " must be [lo, hi]");
    r = {detail::theta_from_json((*it)[0]), detail::theta_from_json((*it)[1])};
  };
  get("users", p.users);
  get("threads_per_window", p.threads_per_window);
  get("windows", p.windows);
  get("posts_per_window", p.posts_per_window);
  get("tokens_per_window", p.tokens_per_window);
  get("user_exponent", p.user_exponent);
  get("thread_exponent", p.thread_exponent);
  get("length_shape", p.length_shape);
  get("vocabulary", p.vocabulary);
  get("zipf_exponent", p.zipf_exponent);
  range("theta_user", p.theta_user);
  range("theta_thread", p.theta_thread);
  if (auto it = j.find("fate_rules"); it != j.end()) {
    for (const auto& f : *it) {
      FateRule r;
      r.from_window = f.value("from_window", r.from_window);
      r.theta_user_below = f.value("theta_user_below", r.theta_user_below);
      r.factor = f.value("factor", r.factor);
      r.slope = f.value("slope", r.slope);
      p.fate_rules.push_back(r);
    }
  }
  if (auto it = j.find("risers"); it != j.end()) {
    for (const auto& f : *it) {
      RiserSpec r;
      r.count = f.value("count", r.count);
      r.start_window = f.value("start_window", r.start_window);
      r.base_count = f.value("base_count", r.base_count);
      r.growth = f.value("growth", r.growth);
      if (f.contains("theta_user")) r.theta_user = detail::theta_from_json(f["theta_user"]);
      if (f.contains("theta_thread")) r.theta_thread = detail::theta_from_json(f["theta_thread"]);
      r.label = f.value("label", r.label);
      p.risers.push_back(r);
    }
  }
  get("drift_sd", p.drift_sd);
  get("seed", p.seed);
  if (auto it = j.find("start"); it != j.end()) {
    auto t = parse_timestamp(it->get<std::string>());
    if (!t) throw Error("synth: unparseable start");
    p.start = *t;
  }
  if (auto it = j.find("window_days"); it != j.end()) p.window_length = std::chrono::days{it->get<long>()};
  return p;
}

inline std::string synth_word_name(std::size_t rank) { return "w" + std::to_string(rank); }

struct SynthWord {
  std::string name;
  double zipf_weight = 0;
  double theta_user = kInf;
  double theta_thread = kInf;
  int riser = -1;  ///< index into GenParams::risers
};

/// Word table: Zipf weights, drawn concentrations and riser assignments.
inline std::vector<SynthWord> synth_vocabulary(const GenParams& p) {
  std::vector<SynthWord> words(p.vocabulary);
  auto draw = [](const ThetaRange& r, SplitMix64& eng) {
    if (std::isinf(r.lo)) return kInf;
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    return std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo)));
  };
  for (std::size_t w = 0; w < p.vocabulary; ++w) {
    SplitMix64 eng(detail::derive(p.seed, detail::kThetaStream, w));
    words[w].name = synth_word_name(w);
    words[w].zipf_weight = std::pow(static_cast<double>(w + 1), -p.zipf_exponent);
    words[w].theta_user = draw(p.theta_user, eng);
    words[w].theta_thread = draw(p.theta_thread, eng);
  }
  std::size_t next = p.vocabulary;
  for (std::size_t g = 0; g < p.risers.size(); ++g) {
    for (std::size_t i = 0; i < p.risers[g].count; ++i) {
      auto& w = words[--next];
      w.riser = static_cast<int>(g);
      w.theta_user = p.risers[g].theta_user;
      w.theta_thread = p.risers[g].theta_thread;
    }
  }
  return words;
}

/// Multiplier on the expected count of word w in window k.
inline double drift_factor(const GenParams& p, std::size_t w, std::size_t k) {
  if (k == 0 || p.drift_sd == 0) return 1.0;
  SplitMix64 eng(detail::derive(p.seed, detail::kDrift, k, w));
  const double z = std::normal_distribution<double>(0.0, 1.0)(eng);
  return std::exp(p.drift_sd * z - p.drift_sd * p.drift_sd / 2);
}

/// Expected occurrences of a word in window k, before drift.
inline double synth_expected_count(const GenParams& p, const SynthWord& w, double zipf_total, std::size_t k) {
  double lambda;
  if (w.riser >= 0) {
    const auto& r = p.risers[static_cast<std::size_t>(w.riser)];
    if (k < r.start_window) return 0.0;
    lambda = r.base_count * std::pow(r.growth, static_cast<double>(k - r.start_window));
  } else {
    lambda = p.tokens_per_window * w.zipf_weight / zipf_total;
  }
  for (const auto& f : p.fate_rules) {
    if (k >= f.from_window && w.theta_user < f.theta_user_below)
      lambda *= f.factor * std::pow(w.theta_user / f.theta_user_below, f.slope);
  }
  return lambda;
}

/// Posts are laid out first (author, thread, length propensity l_p); each
/// word's occurrences then land in posts with probability proportional to
/// l_p * a[w, user] * b[w, thread], where a, b ~ Gamma(theta, 1) / theta.
inline Generated generate(const GenParams& p) {
  validate(p);
  auto words = synth_vocabulary(p);
  double zipf_total = 0;
  for (const auto& w : words)
    if (w.riser < 0) zipf_total += w.zipf_weight;

  std::vector<double> user_weight(p.users), thread_weight(p.threads_per_window);
  for (std::size_t u = 0; u < p.users; ++u) user_weight[u] = std::pow(static_cast<double>(u + 1), -p.user_exponent);
  for (std::size_t t = 0; t < p.threads_per_window; ++t)
    thread_weight[t] = std::pow(static_cast<double>(t + 1), -p.thread_exponent);
  std::discrete_distribution<std::size_t> pick_user(user_weight.begin(), user_weight.end());
  std::discrete_distribution<std::size_t> pick_thread(thread_weight.begin(), thread_weight.end());

  Generated out;
  auto& m = out.manifest;
  m["format"] = "wordniche-synth v1";
  m["params"] = to_json(p);
  m["windows"] = nlohmann::ordered_json::array();

  const std::size_t n_posts = p.posts_per_window;
  std::vector<std::uint32_t> post_user(n_posts), post_thread(n_posts);
  std::vector<double> propensity(n_posts), uniform_cdf(n_posts), cdf(n_posts), a(p.users), b(p.threads_per_window);
  std::vector<Timestamp> post_time(n_posts);
  std::vector<std::vector<std::uint32_t>> post_tokens(n_posts);
  std::vector<char> damped(words.size(), 0);

  for (std::size_t k = 0; k < p.windows; ++k) {
    const Timestamp wstart = p.start + p.window_length * static_cast<long>(k);
    std::mt19937_64 structure(detail::derive(p.seed, detail::kStructure, k));
    std::gamma_distribution<double> length(p.length_shape, 1.0);
    std::uniform_int_distribution<long> offset(0, p.window_length.count() - 1);
    double running = 0;
    for (std::size_t i = 0; i < n_posts; ++i) {
      post_user[i] = static_cast<std::uint32_t>(pick_user(structure));
      post_thread[i] = static_cast<std::uint32_t>(pick_thread(structure));
      propensity[i] = length(structure);
      post_time[i] = wstart + std::chrono::seconds{offset(structure)};
      running += propensity[i];
      uniform_cdf[i] = running;
      post_tokens[i].clear();
    }

    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& word = words[w];
      const double lambda = synth_expected_count(p, word, zipf_total, k) * drift_factor(p, w, k);
      for (const auto& f : p.fate_rules)
        if (k >= f.from_window && word.theta_user < f.theta_user_below) damped[w] = 1;
      if (!(lambda > 0)) continue;
      std::mt19937_64 eng(detail::derive(p.seed, detail::kPlacement, k, w));
      const auto n = std::poisson_distribution<std::uint64_t>(lambda)(eng);
      if (n == 0) continue;

      const std::vector<double>* table = &uniform_cdf;
      if (!std::isinf(word.theta_user) || !std::isinf(word.theta_thread)) {
        // Affinities are fixed per (word, user) across windows; threads are window-local.
        std::fill(a.begin(), a.end(), -1.0);
        for (std::size_t t = 0; t < b.size(); ++t)
          b[t] = detail::affinity(word.theta_thread, detail::derive(p.seed, detail::kThreadAffinity, k, w * b.size() + t));
        double acc = 0;
        for (std::size_t i = 0; i < n_posts; ++i) {
          auto u = post_user[i];
          if (a[u] < 0) a[u] = detail::affinity(word.theta_user, detail::derive(p.seed, detail::kUserAffinity, w, u));
          acc += propensity[i] * a[u] * b[post_thread[i]];
          cdf[i] = acc;
        }
        if (acc > 0) table = &cdf;
      }
      std::uniform_real_distribution<double> pos(0.0, table->back());
      for (std::uint64_t j = 0; j < n; ++j) {
        auto it = std::upper_bound(table->begin(), table->end(), pos(eng));
        auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - table->begin(), n_posts - 1));
        post_tokens[i].push_back(static_cast<std::uint32_t>(w));
      }
    }

    std::mt19937_64 order(detail::derive(p.seed, detail::kOrder, k));
    std::size_t posts = 0, tokens = 0;
    for (std::size_t i = 0; i < n_posts; ++i) {
      auto& toks = post_tokens[i];
      if (toks.empty()) continue;
      std::shuffle(toks.begin(), toks.end(), order);
      std::string body;
      for (std::size_t j = 0; j < toks.size(); ++j) {
        if (j) body.push_back(' ');
        body += words[toks[j]].name;
      }
      out.corpus.posts.push_back(Post{"p" + std::to_string(k) + "-" + std::to_string(i),
                                      "u" + std::to_string(post_user[i]),
                                      "t" + std::to_string(k) + "-" + std::to_string(post_thread[i]), post_time[i],
                                      std::move(body)});
      ++posts;
      tokens += toks.size();
    }
    m["windows"].push_back({{"index", k}, {"start", format_timestamp(wstart)}, {"posts", posts}, {"tokens", tokens}});
  }

  m["words"] = nlohmann::ordered_json::array();
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& word = words[w];
    nlohmann::ordered_json e;
    e["word"] = word.name;
    e["theta_user"] = detail::theta_json(word.theta_user);
    e["theta_thread"] = detail::theta_json(word.theta_thread);
    e["damped"] = damped[w] != 0;
    if (p.drift_sd > 0) {
      e["drift"] = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < p.windows; ++k) e["drift"].push_back(drift_factor(p, w, k));
    }
    e["riser"] = word.riser >= 0 ? nlohmann::ordered_json(p.risers[static_cast<std::size_t>(word.riser)].label)
                                 : nlohmann::ordered_json(nullptr);
    m["words"].push_back(std::move(e));
  }
  return out;
}

}  // namespace wordniche

#endif
