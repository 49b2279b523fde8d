#ifndef WORDNICHE_IMPORTANCE_HPP
#define WORDNICHE_IMPORTANCE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wordniche/dynamics.hpp"

namespace wordniche {

struct RegressionDesign {
  std::vector<std::string> names;
  std::vector<std::vector<double>> predictors;  ///< one column per name
  std::vector<double> response;

  [[nodiscard]] std::size_t n() const { return response.size(); }
  [[nodiscard]] std::size_t p() const { return predictors.size(); }
};

struct OlsFit {
  double intercept = 0;
  std::vector<double> coefficients;
  double r_squared = 0;
  double residual_variance = 0;  ///< SSR / (n - p - 1)
  std::size_t n = 0;
};

inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline void validate(const RegressionDesign& d) {
  if (d.names.size() != d.predictors.size()) throw Error("design: names and predictor columns differ in number");
  if (d.p() == 0) throw Error("design: no predictors");
  if (d.n() <= d.p() + 1)
    throw Error("design: need more than " + std::to_string(d.p() + 1) + " samples, have " + std::to_string(d.n()));
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(d.response)) throw Error("design: response has missing values");
  for (std::size_t k = 0; k < d.p(); ++k) {
    if (d.predictors[k].size() != d.n()) throw Error("design: column " + d.names[k] + " has the wrong length");
    if (!finite(d.predictors[k])) throw Error("design: column " + d.names[k] + " has missing values");
  }
}

/// Centered predictor matrix, n x p.
inline Eigen::MatrixXd centered_predictors(const RegressionDesign& d) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n()), static_cast<Eigen::Index>(d.p()));
  for (std::size_t k = 0; k < d.p(); ++k)
    x.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(d.predictors[k].data(), static_cast<Eigen::Index>(d.n()));
  x.rowwise() -= x.colwise().mean();
  return x;
}

inline Eigen::VectorXd centered_response(const RegressionDesign& d) {
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.response.data(), static_cast<Eigen::Index>(d.n()));
  y.array() -= y.mean();
  return y;
}

/// Throws naming the columns involved in a near-linear dependency.
inline void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double largest = s(0);
  std::string culprits;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (largest > 0 && s(j) > kRankTolerance * largest) continue;
    Eigen::VectorXd v = svd.matrixV().col(j);
    const double vmax = v.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (std::abs(v(k)) <= 1e-6 * vmax) continue;
      const auto& name = names[static_cast<std::size_t>(k)];
      if (culprits.find("'" + name + "'") == std::string::npos) culprits += (culprits.empty() ? "'" : ", '") + name + "'";
    }
  }
  if (!culprits.empty()) throw Error("design is rank deficient; collinear columns: " + culprits);
}

inline double r_squared(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sst) {
  if (x.cols() == 0) return 0.0;
  Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
  return 1.0 - (y - x * b).squaredNorm() / sst;
}

}  // namespace detail

/// Least squares with intercept.
inline OlsFit ols_fit(const RegressionDesign& d) {
  detail::validate(d);
  auto x = detail::centered_predictors(d);
  detail::check_rank(x, d.names);
  auto y = detail::centered_response(d);
  const double sst = y.squaredNorm();
  Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
  const double ssr = (y - x * b).squaredNorm();

  OlsFit fit;
  fit.n = d.n();
  fit.coefficients.assign(b.data(), b.data() + b.size());
  const double ymean = std::accumulate(d.response.begin(), d.response.end(), 0.0) / static_cast<double>(d.n());
  fit.intercept = ymean;
  for (std::size_t k = 0; k < d.p(); ++k) {
    const double xmean =
        std::accumulate(d.predictors[k].begin(), d.predictors[k].end(), 0.0) / static_cast<double>(d.n());
    fit.intercept -= fit.coefficients[k] * xmean;
  }
  fit.r_squared = sst > 0 ? 1.0 - ssr / sst : 0.0;
  fit.residual_variance = ssr / static_cast<double>(d.n() - d.p() - 1);
  return fit;
}

struct Importance {
  std::vector<std::string> names;
  std::vector<double> fractions;  ///< share of response variance per predictor
  double r_squared = 0;
  std::size_t n = 0;
};

inline constexpr std::size_t kMaxImportancePredictors = 8;

/// Averages each predictor's incremental R^2 over every ordering of the predictors.
inline Importance kruskal_importance(const RegressionDesign& d) {
  detail::validate(d);
  if (d.p() > kMaxImportancePredictors) throw Error("kruskal_importance: too many predictors");
  auto x = detail::centered_predictors(d);
  detail::check_rank(x, d.names);
  auto y = detail::centered_response(d);
  const double sst = y.squaredNorm();
  if (sst == 0) throw Error("kruskal_importance: response has zero variance");

  const std::size_t p = d.p();
  std::vector<double> r2(std::size_t{1} << p);
  for (std::size_t mask = 0; mask < r2.size(); ++mask) {
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < p; ++k)
      if (mask >> k & 1) cols.push_back(static_cast<Eigen::Index>(k));
    Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
    r2[mask] = detail::r_squared(sub, y, sst);
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sum(p, 0.0);
  std::size_t orderings = 0;
  do {
    std::size_t mask = 0;
    for (auto k : order) {
      sum[k] += r2[mask | std::size_t{1} << k] - r2[mask];
      mask |= std::size_t{1} << k;
    }
    ++orderings;
  } while (std::next_permutation(order.begin(), order.end()));

  Importance imp{d.names, {}, r2.back(), d.n()};
  for (double s : sum) imp.fractions.push_back(s / static_cast<double>(orderings));
  return imp;
}

/// Response: change in log10 f; predictors D^U, D^T and log10 f at t1.
/// Survivors whose t1 frequency lies in the range only.
inline RegressionDesign fate_design(std::span<const FateRecord> records, const FreqRange& range) {
  RegressionDesign d;
  d.names = {"d_user", "d_thread", "log10_f"};
  d.predictors.resize(3);
  for (const auto& r : records) {
    if (!r.survived || !range.contains(r.log10_f)) continue;
    d.predictors[0].push_back(r.d_user);
    d.predictors[1].push_back(r.d_thread);
    d.predictors[2].push_back(r.log10_f);
    d.response.push_back(*r.delta_log10_f);
  }
  return d;
}

}  // namespace wordniche

#endif
