#pragma once

// Least squares with column-pivoted QR, collinearity pruning, classical or
// cluster-robust (CR1) covariance, and t / Wald-F tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hsdid/error.hpp"

namespace hsdid {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct RowKey {
  std::int64_t person = 0;
  int year = 0;
  bool operator==(const RowKey&) const = default;
};

template <typename Scalar = double>
struct DesignMatrix {
  MatrixX<Scalar> X;
  VectorX<Scalar> y;
  std::vector<std::int64_t> cluster_ids;
  std::vector<std::string> column_names;
  std::vector<RowKey> row_keys;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }

  /// Column position by label, or nullopt.
  std::optional<Eigen::Index> index_of(const std::string& label) const {
    auto it = std::find(column_names.begin(), column_names.end(), label);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - column_names.begin());
  }

  void validate() const {
    const auto n = static_cast<std::size_t>(X.rows());
    if (static_cast<std::size_t>(y.size()) != n) throw InputError("design: y length differs from X rows");
    if (column_names.size() != static_cast<std::size_t>(X.cols())) {
      throw InputError("design: column_names length differs from X columns");
    }
    if (!cluster_ids.empty() && cluster_ids.size() != n) throw InputError("design: cluster_ids length");
    if (!row_keys.empty() && row_keys.size() != n) throw InputError("design: row_keys length");
    if (!X.allFinite() || !y.allFinite()) throw InputError("design: missing or non-finite entries");
  }
};

using DesignMatrixd = DesignMatrix<double>;

template <typename Scalar = double>
struct FitResult {
  std::vector<std::string> column_names;  // retained columns, in design order
  std::vector<std::string> dropped_columns;
  VectorX<Scalar> beta;
  MatrixX<Scalar> vcov;
  VectorX<Scalar> se;
  VectorX<Scalar> t_stats;
  VectorX<Scalar> p_values;
  Eigen::Index n_obs = 0;
  Eigen::Index df_residual = 0;
  Eigen::Index n_clusters = 0;
  bool clustered = false;
  Eigen::Index reference_df = 0;  // df of the t / F reference distributions
  Scalar rss = 0;
  Scalar tss = 0;
  Scalar r_squared_within = 0;

  std::optional<Eigen::Index> index_of(const std::string& label) const {
    auto it = std::find(column_names.begin(), column_names.end(), label);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - column_names.begin());
  }

  bool was_dropped(const std::string& label) const {
    return std::find(dropped_columns.begin(), dropped_columns.end(), label) != dropped_columns.end();
  }

  /// Coefficient by label; throws InputError when unknown or dropped.
  Scalar coefficient(const std::string& label) const { return beta[require(label)]; }
  Scalar std_error(const std::string& label) const { return se[require(label)]; }

  Eigen::Index require(const std::string& label) const {
    if (auto i = index_of(label)) return *i;
    if (was_dropped(label)) throw InputError("coefficient '" + label + "' was dropped as collinear");
    throw InputError("unknown coefficient '" + label + "'");
  }
};

using FitResultd = FitResult<double>;

struct OlsOptions {
  bool cluster = true;
  /// Parameters absorbed before the fit (e.g. individual means); debited from df_residual.
  Eigen::Index absorbed_df = 0;
  double pivot_tolerance = 1e-10;
};

/// Two-sided p-value of a t statistic.
inline double two_sided_t_pvalue(double t, double df) {
  if (!std::isfinite(t)) return std::isnan(t) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

inline double f_upper_pvalue(double f, double df1, double df2) {
  if (!std::isfinite(f)) return std::isnan(f) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  if (f <= 0) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

namespace detail {

/// Maps opaque cluster ids to 0..G-1 in order of first appearance.
inline std::vector<Eigen::Index> cluster_index(const std::vector<std::int64_t>& ids,
                                               Eigen::Index& n_clusters) {
  std::unordered_map<std::int64_t, Eigen::Index> map;
  map.reserve(ids.size());
  std::vector<Eigen::Index> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = map.emplace(ids[i], static_cast<Eigen::Index>(map.size()));
    out[i] = it->second;
  }
  n_clusters = static_cast<Eigen::Index>(map.size());
  return out;
}

}  // namespace detail

/// Columns of X kept by column-pivoted QR: |R_jj| > tolerance * ||X||_F.
/// Returned in original column order.
template <typename Scalar>
std::vector<Eigen::Index> independent_columns(const MatrixX<Scalar>& X, double tolerance = 1e-10) {
  std::vector<Eigen::Index> kept;
  if (X.cols() == 0) return kept;
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(X);
  const Scalar tol = Scalar(tolerance) * X.norm();
  const auto diag = qr.matrixQR().diagonal();
  const auto& perm = qr.colsPermutation().indices();
  std::vector<bool> keep(static_cast<std::size_t>(X.cols()), false);
  for (Eigen::Index j = 0; j < diag.size(); ++j) {
    if (std::abs(diag[j]) > tol) keep[static_cast<std::size_t>(perm[j])] = true;
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (keep[static_cast<std::size_t>(j)]) kept.push_back(j);
  }
  return kept;
}

/// Cluster-robust sandwich with the CR1 factor (G/(G-1))((n-1)/(n-k)).
template <typename Scalar>
MatrixX<Scalar> cluster_sandwich(const MatrixX<Scalar>& X, const VectorX<Scalar>& resid,
                                 const MatrixX<Scalar>& bread,
                                 const std::vector<std::int64_t>& cluster_ids,
                                 Eigen::Index* n_clusters_out = nullptr) {
  Eigen::Index G = 0;
  const auto idx = detail::cluster_index(cluster_ids, G);
  const Eigen::Index n = X.rows(), k = X.cols();
  MatrixX<Scalar> scores = MatrixX<Scalar>::Zero(G, k);
  for (Eigen::Index i = 0; i < n; ++i) scores.row(idx[static_cast<std::size_t>(i)]) += resid[i] * X.row(i);
  const MatrixX<Scalar> meat = scores.transpose() * scores;
  const Scalar factor = (Scalar(G) / Scalar(G - 1)) * (Scalar(n - 1) / Scalar(n - k));
  MatrixX<Scalar> v = factor * (bread * meat * bread);
  if (n_clusters_out) *n_clusters_out = G;
  return Scalar(0.5) * (v + v.transpose());
}

/// Ordinary least squares. Exactly collinear columns (pivot magnitude below
/// `pivot_tolerance * ||X||_F`) are dropped and reported.
template <typename Scalar>
FitResult<Scalar> fit_ols(const DesignMatrix<Scalar>& dm, const OlsOptions& opts = {}) {
  dm.validate();
  const Eigen::Index n = dm.rows();
  const Eigen::Index k_all = dm.cols();
  if (opts.cluster && dm.cluster_ids.size() != static_cast<std::size_t>(n)) {
    throw InputError("clustered fit requires one cluster id per row");
  }
  if (n == 0) throw EstimationError("no observations");
  const Scalar ybar = dm.y.mean();
  const Scalar tss = (dm.y.array() - ybar).square().sum();
  if (!(tss > Scalar(0))) throw EstimationError("outcome has zero variance");

  // Rank determination.
  FitResult<Scalar> fit;
  const std::vector<Eigen::Index> kept = independent_columns(dm.X, opts.pivot_tolerance);
  for (Eigen::Index j = 0, next = 0; j < k_all; ++j) {
    const auto& name = dm.column_names[static_cast<std::size_t>(j)];
    if (next < static_cast<Eigen::Index>(kept.size()) && kept[static_cast<std::size_t>(next)] == j) {
      fit.column_names.push_back(name);
      ++next;
    } else {
      fit.dropped_columns.push_back(name);
    }
  }
  const auto k = static_cast<Eigen::Index>(kept.size());
  if (n <= k) {
    throw EstimationError("insufficient observations: n = " + std::to_string(n) +
                          " for k = " + std::to_string(k) + " columns");
  }

  MatrixX<Scalar> X(n, k);
  for (Eigen::Index j = 0; j < k; ++j) X.col(j) = dm.X.col(kept[static_cast<std::size_t>(j)]);

  VectorX<Scalar> beta = VectorX<Scalar>::Zero(k);
  MatrixX<Scalar> bread = MatrixX<Scalar>::Zero(k, k);
  if (k > 0) {
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(X);
    beta = qr.solve(dm.y);
    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    const MatrixX<Scalar> R = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const MatrixX<Scalar> Rinv =
        R.template triangularView<Eigen::Upper>().solve(MatrixX<Scalar>::Identity(k, k));
    const MatrixX<Scalar> inner = Rinv * Rinv.transpose();
    const auto& P = qr.colsPermutation();
    bread = P * inner * P.transpose();
  }
  const VectorX<Scalar> resid = dm.y - X * beta;

  fit.beta = beta;
  fit.n_obs = n;
  fit.rss = resid.squaredNorm();
  fit.tss = tss;
  fit.r_squared_within = std::clamp(Scalar(1) - fit.rss / tss, Scalar(0), Scalar(1));
  fit.df_residual = n - k - opts.absorbed_df;
  fit.clustered = opts.cluster;

  if (opts.cluster) {
    fit.vcov = cluster_sandwich<Scalar>(X, resid, bread, dm.cluster_ids, &fit.n_clusters);
    if (fit.n_clusters < 2) throw EstimationError("clustered inference needs at least two clusters");
    fit.reference_df = fit.n_clusters - 1;
  } else {
    if (fit.df_residual <= 0) throw EstimationError("no residual degrees of freedom");
    const Scalar sigma2 = fit.rss / Scalar(fit.df_residual);
    fit.vcov = sigma2 * bread;
    fit.vcov = Scalar(0.5) * (fit.vcov + fit.vcov.transpose()).eval();
    fit.reference_df = fit.df_residual;
  }

  fit.se = fit.vcov.diagonal().cwiseMax(Scalar(0)).cwiseSqrt();
  fit.t_stats.resize(k);
  fit.p_values.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (fit.se[j] > Scalar(0)) {
      fit.t_stats[j] = fit.beta[j] / fit.se[j];
      fit.p_values[j] = Scalar(two_sided_t_pvalue(double(fit.t_stats[j]), double(fit.reference_df)));
    } else {
      fit.t_stats[j] = std::numeric_limits<Scalar>::quiet_NaN();
      fit.p_values[j] = std::numeric_limits<Scalar>::quiet_NaN();
    }
  }
  return fit;
}

struct WaldTest {
  double F = 0.0;
  double p = 1.0;
  int q = 0;
  double df = 0.0;
};

/// Joint test that every listed coefficient is zero: F = b' V^{-1} b / q.
template <typename Scalar>
WaldTest wald_f(const FitResult<Scalar>& fit, const std::vector<std::string>& labels) {
  if (labels.empty()) throw InputError("Wald test needs at least one coefficient");
  const auto q = static_cast<Eigen::Index>(labels.size());
  std::vector<Eigen::Index> idx;
  for (const auto& l : labels) idx.push_back(fit.require(l));
  VectorX<Scalar> b(q);
  MatrixX<Scalar> V(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    b[a] = fit.beta[idx[static_cast<std::size_t>(a)]];
    for (Eigen::Index c = 0; c < q; ++c) {
      V(a, c) = fit.vcov(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(V);
  const Scalar max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > Scalar(1e-12) * max_ev) || !(max_ev > Scalar(0))) {
    throw EstimationError("restricted covariance block is singular");
  }
  Eigen::LDLT<MatrixX<Scalar>> ldlt(V);
  WaldTest w;
  w.q = static_cast<int>(q);
  w.F = double(b.dot(ldlt.solve(b)) / Scalar(q));
  w.df = double(fit.reference_df);
  w.p = f_upper_pvalue(w.F, double(q), w.df);
  return w;
}

struct TTest {
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  /// Rejections at 10%, 5%, 1%, 0.1%.
  std::array<bool, 4> reject{};
};

inline std::array<bool, 4> rejection_flags(double p) {
  return {p < 0.10, p < 0.05, p < 0.01, p < 0.001};
}

template <typename Scalar>
TTest t_test(const FitResult<Scalar>& fit, const std::string& label, double null_value = 0.0) {
  const auto j = fit.require(label);
  TTest out;
  out.estimate = double(fit.beta[j]);
  out.se = double(fit.se[j]);
  if (!(out.se > 0.0)) throw EstimationError("standard error of '" + label + "' is zero");
  out.t = (out.estimate - null_value) / out.se;
  out.p = two_sided_t_pvalue(out.t, double(fit.reference_df));
  out.reject = rejection_flags(out.p);
  return out;
}

/// Stars at 5% / 1% / 0.1%.
inline const char* significance_stars(double p) {
  if (!(p == p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace hsdid
