#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "wordniche/importance.hpp"

using namespace wordniche;

namespace {

/// Walsh function k on n = 2^m points: mutually orthogonal, zero-mean, unit variance.
std::vector<double> walsh(std::size_t k, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::popcount(i & k) % 2 ? -1.0 : 1.0;
  return v;
}

RegressionDesign random_design(std::uint32_t seed, std::size_t n) {
  std::mt19937 eng(seed);
  std::normal_distribution<double> z(0, 1);
  RegressionDesign d;
  d.names = {"a", "b", "c"};
  d.predictors.assign(3, {});
  for (std::size_t i = 0; i < n; ++i) {
    double a = z(eng), b = 0.6 * a + z(eng), c = z(eng) - 0.3 * b;
    d.predictors[0].push_back(a);
    d.predictors[1].push_back(b);
    d.predictors[2].push_back(c);
    d.response.push_back(0.8 * a - 0.5 * b + 0.2 * c + z(eng));
  }
  return d;
}

}  // namespace

TEST(Ols, ExactLinearResponse) {
  auto d = random_design(1, 200);
  for (std::size_t i = 0; i < d.n(); ++i)
    d.response[i] = 1.5 + 2 * d.predictors[0][i] - 3 * d.predictors[1][i] + 0.5 * d.predictors[2][i];
  auto fit = ols_fit(d);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.5, 1e-8);
  EXPECT_NEAR(fit.coefficients[0], 2, 1e-8);
  EXPECT_NEAR(fit.coefficients[1], -3, 1e-8);
  EXPECT_NEAR(fit.coefficients[2], 0.5, 1e-8);
  EXPECT_NEAR(fit.residual_variance, 0, 1e-12);
}

TEST(Ols, SinglePredictor) {
  RegressionDesign d{{"x"}, {{1, 2, 3, 4, 5}}, {2, 4, 6, 8, 10}};
  auto fit = ols_fit(d);
  EXPECT_NEAR(fit.coefficients[0], 2, 1e-12);
  EXPECT_NEAR(fit.intercept, 0, 1e-12);
}

TEST(Ols, IndependentNoiseExplainsLittle) {
  auto d = random_design(2, 10000);
  std::mt19937 eng(99);
  std::normal_distribution<double> z(0, 1);
  for (auto& y : d.response) y = z(eng);
  EXPECT_LT(ols_fit(d).r_squared, 0.01);
}

TEST(Ols, RankDeficiencyNamesColumns) {
  auto d = random_design(3, 50);
  d.names = {"alpha", "beta", "gamma"};
  for (std::size_t i = 0; i < d.n(); ++i) d.predictors[2][i] = d.predictors[0][i] - 2 * d.predictors[1][i];
  try {
    ols_fit(d);
    FAIL() << "expected rank error";
  } catch (const Error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("'alpha'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'beta'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'gamma'"), std::string::npos) << msg;
  }
  auto constant = random_design(4, 50);
  constant.predictors[1].assign(50, 3.0);
  try {
    ols_fit(constant);
    FAIL() << "expected rank error";
  } catch (const Error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("'a'"), std::string::npos) << msg;
  }
}

TEST(Ols, RejectsBadDesigns) {
  EXPECT_THROW(ols_fit({{"x"}, {{1, 2}}, {1, 2}}), Error);
  EXPECT_THROW(ols_fit({{"x"}, {{1, 2, 3, 4}}, {1, 2, NAN, 4}}), Error);
  EXPECT_THROW(ols_fit({{"x", "y"}, {{1, 2, 3, 4}}, {1, 2, 3, 4}}), Error);
}

TEST(Kruskal, SumsToFullRSquared) {
  for (std::uint32_t seed = 10; seed < 20; ++seed) {
    auto d = random_design(seed, 300);
    auto imp = kruskal_importance(d);
    double total = 0;
    for (double f : imp.fractions) total += f;
    EXPECT_NEAR(total, ols_fit(d).r_squared, 1e-10);
    EXPECT_NEAR(imp.r_squared, ols_fit(d).r_squared, 1e-10);
  }
}

TEST(Kruskal, OrthogonalDesignMatchesAnalyticShares) {
  const std::size_t n = 64;
  const std::vector<double> beta{1.5, -0.7, 0.2};
  const double sigma = 0.9;
  RegressionDesign d;
  d.names = {"x1", "x2", "x3"};
  for (std::size_t k = 0; k < 3; ++k) d.predictors.push_back(walsh(k + 1, n));
  const auto noise = walsh(12, n);
  d.response.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) d.response[i] += beta[k] * d.predictors[k][i];
    d.response[i] += sigma * noise[i];
  }
  double var_y = sigma * sigma;
  for (double b : beta) var_y += b * b;
  auto imp = kruskal_importance(d);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(imp.fractions[k], beta[k] * beta[k] / var_y, 1e-6);

  RegressionDesign two{{"x1", "x2"}, {walsh(1, n), walsh(2, n)}, {}};
  for (std::size_t i = 0; i < n; ++i) two.response.push_back(two.predictors[0][i] + two.predictors[1][i]);
  auto half = kruskal_importance(two);
  EXPECT_NEAR(half.fractions[0], 0.5, 1e-12);
  EXPECT_NEAR(half.fractions[1], 0.5, 1e-12);
}

TEST(Kruskal, NearDuplicatePredictorsSplitEvenly) {
  std::mt19937 eng(5);
  std::normal_distribution<double> z(0, 1);
  RegressionDesign d{{"x1", "x2"}, {{}, {}}, {}};
  for (int i = 0; i < 500; ++i) {
    double x = z(eng);
    d.predictors[0].push_back(x + 1e-5 * z(eng));
    d.predictors[1].push_back(x);
    d.response.push_back(x);
  }
  auto imp = kruskal_importance(d);
  EXPECT_NEAR(imp.fractions[0], 0.5, 1e-6);
  EXPECT_NEAR(imp.fractions[1], 0.5, 1e-6);
}

TEST(Kruskal, PermutationSymmetryAndScaleInvariance) {
  auto d = random_design(30, 400);
  auto base = kruskal_importance(d);

  RegressionDesign permuted{{"c", "a", "b"}, {d.predictors[2], d.predictors[0], d.predictors[1]}, d.response};
  auto p = kruskal_importance(permuted);
  EXPECT_NEAR(p.fractions[0], base.fractions[2], 1e-12);
  EXPECT_NEAR(p.fractions[1], base.fractions[0], 1e-12);
  EXPECT_NEAR(p.fractions[2], base.fractions[1], 1e-12);

  auto scaled = d;
  for (auto& v : scaled.predictors[1]) v *= 250.0;
  for (auto& v : scaled.predictors[2]) v *= 1e-3;
  auto s = kruskal_importance(scaled);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.fractions[k], base.fractions[k], 1e-12);
}

TEST(Kruskal, FateDesignUsesSurvivorsInRange) {
  std::vector<FateRecord> rs(3);
  rs[0].survived = true;
  rs[0].log10_f = -4;
  rs[0].delta_log10_f = 0.2;
  rs[1].log10_f = -4;  // fallen
  rs[2].survived = true;
  rs[2].log10_f = -2;  // above the range
  rs[2].delta_log10_f = 0.1;
  auto d = fate_design(rs, {-5, -2.52});
  EXPECT_EQ(d.n(), 1u);
  EXPECT_EQ(d.names, (std::vector<std::string>{"d_user", "d_thread", "log10_f"}));
}
