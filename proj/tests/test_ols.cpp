#include <doctest.h>

#include <random>

#include "hsdid/error.hpp"
#include "hsdid/ols.hpp"
#include "oracles.hpp"

using namespace hsdid;

namespace {

DesignMatrixd random_design(std::mt19937_64& g, Eigen::Index n, Eigen::Index k, Eigen::Index clusters) {
  std::normal_distribution<double> z;
  DesignMatrixd dm;
  dm.X.resize(n, k);
  dm.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dm.X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) dm.X(i, j) = z(g);
    dm.y[i] = 0.5 + dm.X.row(i).sum() * 0.3 + z(g) * (1.0 + std::abs(dm.X(i, std::min<Eigen::Index>(1, k - 1))));
    dm.cluster_ids.push_back(static_cast<std::int64_t>(i % clusters) * 13 + 5);
  }
  for (Eigen::Index j = 0; j < k; ++j) dm.column_names.push_back("x" + std::to_string(j));
  return dm;
}

// 12 rows in 3 clusters of 4 with two regressors and an intercept.
DesignMatrixd sandwich_fixture() {
  const double x1[12] = {0.3, -1.2, 0.8, 2.1, -0.4, 1.5, 0.0, -2.2, 0.9, 1.1, -0.7, 0.2};
  const double x2[12] = {1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 1, 0};
  const double y[12] = {2.1, -0.5, 1.9, 4.4, 0.7, 3.9, 0.2, -2.8, 3.1, 1.6, 0.8, 0.1};
  DesignMatrixd dm;
  dm.X.resize(12, 3);
  dm.y.resize(12);
  for (int i = 0; i < 12; ++i) {
    dm.X(i, 0) = 1;
    dm.X(i, 1) = x1[i];
    dm.X(i, 2) = x2[i];
    dm.y[i] = y[i];
    dm.cluster_ids.push_back(i / 4 + 100);
  }
  dm.column_names = {"intercept", "x1", "x2"};
  return dm;
}

}  // namespace

TEST_CASE("exact linear data is interpolated") {
  std::mt19937_64 g(1);
  auto dm = random_design(g, 40, 4, 8);
  const Eigen::Vector4d b(1.5, -2.0, 0.25, 3.0);
  dm.y = dm.X * b;
  OlsOptions o;
  o.cluster = false;
  const auto fit = fit_ols(dm, o);
  CHECK((fit.beta - b).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.rss < 1e-18);
}

TEST_CASE("duplicated column is dropped and reported") {
  std::mt19937_64 g(2);
  auto dm = random_design(g, 50, 3, 10);
  const auto base = fit_ols(dm);
  DesignMatrixd dup = dm;
  dup.X.conservativeResize(Eigen::NoChange, 4);
  dup.X.col(3) = dup.X.col(1);
  dup.column_names.push_back("x1_copy");
  const auto fit = fit_ols(dup);
  REQUIRE(fit.dropped_columns.size() == 1);
  CHECK(fit.dropped_columns[0] == "x1_copy");
  CHECK((fit.beta - base.beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.vcov - base.vcov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(fit.coefficient("x1_copy"), InputError);
}

TEST_CASE("cluster sandwich equals the direct summation oracle on 12 rows") {
  const auto dm = sandwich_fixture();
  const auto fit = fit_ols(dm);
  const Eigen::MatrixXd ref = oracle::cr1_vcov(dm.X, dm.y, dm.cluster_ids);
  CHECK((fit.vcov - ref).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.n_clusters == 3);
  CHECK(fit.reference_df == 2);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(fit.se[j] == doctest::Approx(std::sqrt(ref(j, j))).epsilon(1e-12));
}

TEST_CASE("fit invariants on random fixtures") {
  std::mt19937_64 g(17);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index k = 2 + rep % 4;
    auto dm = random_design(g, 30 + rep % 20, k, 3 + rep % 7);
    const auto fit = fit_ols(dm);
    CHECK((fit.vcov - fit.vcov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.vcov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    const Eigen::VectorXd e = dm.y - dm.X * fit.beta;
    CHECK((dm.X.transpose() * e).cwiseAbs().maxCoeff() < 1e-8 * dm.y.norm());
    for (Eigen::Index j = 0; j < k; ++j) {
      CHECK(fit.se[j] == std::sqrt(fit.vcov(j, j)));
      CHECK(fit.p_values[j] >= 0.0);
      CHECK(fit.p_values[j] <= 1.0);
    }
  }
}

TEST_CASE("one row per cluster is HC1 with the stated factor") {
  std::mt19937_64 g(5);
  auto dm = random_design(g, 25, 3, 25);
  const auto fit = fit_ols(dm);
  const Eigen::MatrixXd inv = (dm.X.transpose() * dm.X).inverse();
  const Eigen::VectorXd e = dm.y - dm.X * fit.beta;
  const Eigen::MatrixXd meat = dm.X.transpose() * e.array().square().matrix().asDiagonal() * dm.X;
  const double n = 25, k = 3;
  const Eigen::MatrixXd hc = (n / (n - 1)) * ((n - 1) / (n - k)) * inv * meat * inv;
  CHECK((fit.vcov - hc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rescaling a regressor rescales its coefficient and SE only") {
  std::mt19937_64 g(8);
  auto dm = random_design(g, 60, 3, 12);
  const auto a = fit_ols(dm);
  dm.X.col(2) *= 7.5;
  const auto b = fit_ols(dm);
  CHECK(std::abs(b.beta[2] - a.beta[2] / 7.5) < 1e-10);
  CHECK(std::abs(b.se[2] - a.se[2] / 7.5) < 1e-10);
  CHECK(std::abs(b.t_stats[2] - a.t_stats[2]) < 1e-10);
  CHECK(std::abs(b.p_values[2] - a.p_values[2]) < 1e-10);
}

TEST_CASE("classical variance uses sigma^2 (X'X)^-1 and n - k df") {
  std::mt19937_64 g(9);
  auto dm = random_design(g, 40, 3, 4);
  OlsOptions o;
  o.cluster = false;
  const auto fit = fit_ols(dm, o);
  const Eigen::VectorXd e = dm.y - dm.X * fit.beta;
  const Eigen::MatrixXd ref = (e.squaredNorm() / 37.0) * (dm.X.transpose() * dm.X).inverse();
  CHECK((fit.vcov - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.reference_df == 37);
  CHECK_FALSE(fit.clustered);
}

TEST_CASE("fit errors") {
  std::mt19937_64 g(10);
  auto dm = random_design(g, 10, 3, 5);
  DesignMatrixd flat = dm;
  flat.y.setConstant(2.0);
  CHECK_THROWS_AS(fit_ols(flat), EstimationError);
  DesignMatrixd wide = random_design(g, 3, 3, 3);
  CHECK_THROWS_AS(fit_ols(wide), EstimationError);
  DesignMatrixd one_cluster = dm;
  for (auto& c : one_cluster.cluster_ids) c = 1;
  CHECK_THROWS_AS(fit_ols(one_cluster), EstimationError);
  DesignMatrixd nan = dm;
  nan.X(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_ols(nan), InputError);
}

TEST_CASE("Wald F") {
  std::mt19937_64 g(12);
  auto dm = random_design(g, 80, 4, 16);
  const auto fit = fit_ols(dm);
  SUBCASE("single restriction equals t squared") {
    const auto w = wald_f(fit, {"x2"});
    const double t = fit.beta[2] / fit.se[2];
    CHECK(std::abs(w.F - t * t) < 1e-10 * std::max(1.0, t * t));
    CHECK(w.q == 1);
    CHECK(w.df == 15.0);
  }
  SUBCASE("two restrictions match the 2x2 oracle") {
    const auto w = wald_f(fit, {"x1", "x3"});
    const double ref = oracle::wald_f_2x2(fit.beta[1], fit.beta[3], fit.vcov(1, 1), fit.vcov(1, 3), fit.vcov(3, 3));
    CHECK(std::abs(w.F - ref) < 1e-10);
    CHECK(w.p > 0.0);
    CHECK(w.p <= 1.0);
  }
  SUBCASE("dropped column") {
    DesignMatrixd dup = dm;
    dup.X.conservativeResize(Eigen::NoChange, 5);
    dup.X.col(4) = 2.0 * dup.X.col(1);
    dup.column_names.push_back("x1_twice");
    const auto f2 = fit_ols(dup);
    REQUIRE(f2.dropped_columns.size() == 1);
    CHECK_THROWS_AS(wald_f(f2, {f2.dropped_columns[0]}), InputError);
  }
}

TEST_CASE("t test") {
  std::mt19937_64 g(13);
  auto dm = random_design(g, 60, 3, 12);
  const auto fit = fit_ols(dm);
  const auto at_estimate = t_test(fit, "x1", fit.beta[1]);
  CHECK(at_estimate.t == 0.0);
  CHECK(at_estimate.p == 1.0);
  CHECK_THROWS_AS(t_test(fit, "nope"), InputError);

  // Rejects at 10% only.
  CHECK(rejection_flags(0.08) == std::array<bool, 4>{true, false, false, false});
  CHECK(std::string(significance_stars(0.08)).empty());
  CHECK(std::string(significance_stars(0.02)) == "*");
  CHECK(std::string(significance_stars(0.002)) == "**");
  CHECK(std::string(significance_stars(0.0002)) == "***");

  FitResultd degenerate = fit;
  degenerate.se[1] = 0.0;
  CHECK_THROWS_AS(t_test(degenerate, "x1"), EstimationError);
}
