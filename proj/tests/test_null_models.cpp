#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "wordniche/null_models.hpp"

using namespace wordniche;
using wordniche::testing::counts_from;
using wordniche::testing::PostSpec;

namespace {

std::vector<PostSpec> random_window(std::uint32_t seed, int posts, EntityId users, EntityId threads, int max_len,
                                    double word_p, bool heavy_users = false) {
  std::mt19937 eng(seed);
  std::uniform_int_distribution<EntityId> uniform_user(0, users - 1), t(0, threads - 1);
  std::geometric_distribution<EntityId> heavy_user(10.0 / users);
  auto u = [&](std::mt19937& e) { return heavy_users ? heavy_user(e) % users : uniform_user(e); };
  std::uniform_int_distribution<int> len(1, max_len);
  std::geometric_distribution<WordId> word(word_p);
  std::vector<PostSpec> out;
  for (int p = 0; p < posts; ++p) {
    PostSpec s{u(eng), t(eng), {}};
    for (int k = len(eng); k > 0; --k) s.tokens.push_back(word(eng));
    out.push_back(std::move(s));
  }
  return out;
}

// Per-group word tallies after a shuffle, keyed by (group, word).
std::map<std::pair<std::uint32_t, std::uint32_t>, int> tally(const SlotLayout& layout, const NullAssignment& a,
                                                             bool by_thread) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> out;
  for (std::size_t k = 0; k < a.slot_words.size(); ++k) {
    auto g = by_thread ? layout.slot_thread(k) : layout.slot_user(k);
    ++out[{g, a.slot_words[k]}];
  }
  return out;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, int> tally(const SparseCounts& word_groups) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> out;
  for (std::size_t w = 0; w < word_groups.rows(); ++w)
    for (auto [g, n] : word_groups.row(w)) out[{g, static_cast<std::uint32_t>(w)}] = static_cast<int>(n);
  return out;
}

}  // namespace

TEST(Shuffle, ConservesGroupMultisets) {
  auto c = counts_from(random_window(1, 80, 9, 6, 12, 0.2));
  SlotLayout layout(c);
  ASSERT_EQ(layout.num_slots(), c.total_tokens);
  for (std::size_t r = 0; r < 5; ++r) {
    auto within_thread = shuffle(layout, ShuffleKind::within_thread, 42, r);
    EXPECT_EQ(tally(layout, within_thread, true), tally(c.word_threads));
    auto within_user = shuffle(layout, ShuffleKind::within_user, 42, r);
    EXPECT_EQ(tally(layout, within_user, false), tally(c.word_users));
    auto global = shuffle(layout, ShuffleKind::global, 42, r);
    std::vector<std::uint64_t> nw(c.num_words(), 0);
    for (auto w : global.slot_words) ++nw[w];
    EXPECT_EQ(nw, c.word_counts);
  }
}

TEST(Shuffle, WithinThreadKeepsSingleUserThreads) {
  std::vector<PostSpec> posts;
  for (EntityId t = 0; t < 12; ++t) posts.push_back({t % 4, t, {t % 3, 7, 8, t % 5}});
  auto c = counts_from(posts);
  SlotLayout layout(c);
  for (std::size_t r = 0; r < 10; ++r) {
    auto d = distinct_entities(layout, shuffle(layout, ShuffleKind::within_thread, 3, r));
    for (std::size_t w = 0; w < c.num_words(); ++w) EXPECT_EQ(d.users[w], c.distinct_users(w));
  }
}

TEST(Shuffle, DeterministicPerReplicate) {
  auto c = counts_from(random_window(2, 50, 5, 5, 10, 0.3));
  SlotLayout layout(c);
  auto a = shuffle(layout, ShuffleKind::global, 99, 4);
  auto b = shuffle(layout, ShuffleKind::global, 99, 4);
  auto other = shuffle(layout, ShuffleKind::global, 99, 5);
  EXPECT_EQ(a.slot_words, b.slot_words);
  EXPECT_NE(a.slot_words, other.slot_words);
}

TEST(Shuffle, UniformOverPermutations) {
  // Five distinct words in five slots: every one of the 120 orders is equally likely.
  auto c = counts_from({{0, 0, {0, 1}}, {1, 0, {2}}, {1, 1, {3, 4}}});
  SlotLayout layout(c);
  std::map<std::vector<std::uint32_t>, int> freq;
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) ++freq[shuffle(layout, ShuffleKind::global, 2718, r).slot_words];
  ASSERT_EQ(freq.size(), 120u);
  const double expected = reps / 120.0;
  double chi2 = 0;
  for (auto& [perm, n] : freq) chi2 += (n - expected) * (n - expected) / expected;
  boost::math::chi_squared dist(119);
  double p = boost::math::cdf(boost::math::complement(dist, chi2));
  EXPECT_GT(p, 0.001) << "chi2=" << chi2;
}

TEST(NullModel, GlobalShuffleIsCalibrated) {
  auto c = counts_from(random_window(5, 2000, 300, 400, 30, 0.02));
  auto s = null_dissemination(c, {ShuffleKind::global, 17, 100});
  int checked = 0;
  for (std::size_t w = 0; w < c.num_words(); ++w) {
    if (c.word_counts[w] < 20) continue;
    EXPECT_NEAR(s.mean_d_user[w], 1.0, 0.02);
    EXPECT_NEAR(s.mean_d_thread[w], 1.0, 0.02);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(NullModel, BandIsOrderedAndWidensForRareWords) {
  // Heavy-tailed activity makes collisions of rare words common.
  auto c = counts_from(random_window(8, 3000, 400, 500, 30, 0.004, true));
  BandOptions opts;
  opts.baseline = Baseline::exact;
  opts.bin_width = 0.25;
  auto band = mc_band(c, {ShuffleKind::global, 1, 100}, opts);
  ASSERT_GE(band.bins.size(), 3u);
  for (const auto& b : band.bins) {
    EXPECT_GE(b.n, 20u);
    EXPECT_LE(b.values[0], b.values[1]);
  }
  // Widths at the rare end exceed widths at the frequent end.
  double rare = band.bins.front().values[1] - band.bins.front().values[0];
  double frequent = band.bins.back().values[1] - band.bins.back().values[0];
  EXPECT_GT(rare, frequent);
}

TEST(Conditional, SaturatedThreadForcesBothUsers) {
  // Thread 0 has exactly two slots, both w; users 0 and 1 own one each.
  auto c = counts_from({{0, 0, {5}}, {1, 0, {5}}, {0, 1, {6, 7}}, {1, 1, {8}}});
  auto e = conditional_expected_analytic(c, ConditionalMode::users_within_threads);
  EXPECT_DOUBLE_EQ(e[*c.local_word(5)], 2.0);
}

TEST(Conditional, TwoThreadWorkedExample) {
  // Users 0 and 1 each hold two tokens in both threads; w = 9 occurs twice in thread 0, both by user 0.
  auto c = counts_from({{0, 0, {9, 9}}, {1, 0, {1, 2}}, {0, 1, {3, 4}}, {1, 1, {5, 6}}});
  auto w = *c.local_word(9);
  auto hat = conditional_expected_analytic(c, ConditionalMode::users_within_threads);
  EXPECT_NEAR(hat[w], 5.0 / 3.0, 1e-15);
  DisseminationModel model(c);
  EXPECT_NEAR(model.expected(EntityKind::users, 2, Baseline::exact), 11.0 / 7.0, 1e-15);
  EXPECT_NEAR(c.distinct_users(w) / hat[w], 0.6, 1e-15);
  EXPECT_NEAR(c.distinct_users(w) / model.expected(EntityKind::users, 2, Baseline::exact), 7.0 / 11.0, 1e-15);
}

TEST(Conditional, MatchesEnumerationOracle) {
  std::mt19937 eng(31);
  std::uniform_int_distribution<int> cell(0, 2);
  std::uniform_int_distribution<WordId> word(0, 2);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<PostSpec> posts;
    for (EntityId u = 0; u < 3; ++u)
      for (EntityId t = 0; t < 3; ++t) {
        PostSpec s{u, t, {}};
        for (int k = cell(eng); k > 0; --k) s.tokens.push_back(word(eng));
        if (!s.tokens.empty()) posts.push_back(std::move(s));
      }
    if (posts.empty()) continue;
    auto c = counts_from(posts);
    auto by_users = conditional_expected_analytic(c, ConditionalMode::users_within_threads);
    auto by_threads = conditional_expected_analytic(c, ConditionalMode::threads_within_users);
    for (std::size_t w = 0; w < c.num_words(); ++w) {
      std::vector<oracle::Group> ug, tg;
      for (auto [t, n] : c.word_threads.row(w)) {
        oracle::Group g;
        for (auto [u, m] : c.thread_users.row(t)) {
          g.members.push_back(static_cast<int>(u));
          g.sizes.push_back(m);
        }
        g.occurrences = static_cast<unsigned>(n);
        ug.push_back(g);
      }
      for (auto [u, n] : c.word_users.row(w)) {
        oracle::Group g;
        for (auto [t, m] : c.user_threads.row(u)) {
          g.members.push_back(static_cast<int>(t));
          g.sizes.push_back(m);
        }
        g.occurrences = static_cast<unsigned>(n);
        tg.push_back(g);
      }
      EXPECT_NEAR(by_users[w], oracle::enumerate_conditional(ug), 1e-12);
      EXPECT_NEAR(by_threads[w], oracle::enumerate_conditional(tg), 1e-12);
    }
  }
}

TEST(Conditional, AnalyticAgreesWithMonteCarlo) {
  auto c = counts_from(random_window(12, 25, 6, 5, 14, 0.15));
  ASSERT_NEAR(static_cast<double>(c.total_tokens), 200.0, 60.0);
  for (auto mode : {ConditionalMode::users_within_threads, ConditionalMode::threads_within_users}) {
    auto analytic = conditional_expected_analytic(c, mode);
    auto mc = conditional_expected_mc(c, mode, 77, 10000);
    for (std::size_t w = 0; w < c.num_words(); ++w) {
      double tol = 3 * mc[w].standard_error;
      if (mc[w].standard_error == 0) tol = 1e-12;  // deterministic outcome
      EXPECT_NEAR(analytic[w], mc[w].value, tol) << "word " << w;
    }
  }
}

TEST(Conditional, FewReplicatesWarn) {
  auto c = counts_from(random_window(13, 30, 4, 4, 10, 0.3));
  auto r = conditional_expected_mc(c, ConditionalMode::users_within_threads, 1, 10);
  EXPECT_FALSE(r[0].warnings.empty());
}

TEST(Conditional, DhatIsOneWhenThreadsHaveOneUser) {
  std::vector<PostSpec> posts;
  std::mt19937 eng(6);
  std::geometric_distribution<WordId> word(0.3);
  for (EntityId t = 0; t < 40; ++t) {
    PostSpec s{t % 9, t, {}};
    for (int k = 0; k < 15; ++k) s.tokens.push_back(word(eng));
    posts.push_back(std::move(s));
  }
  auto c = counts_from(posts);
  auto rows = dhat_all(c);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.dhat_user, 1.0);
  EXPECT_THROW(dhat(c, 1000), Error);
}
