#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "grpss/freq.hpp"
#include "grpss/random.hpp"
#include "grpss/simulate.hpp"
#include "grpss/thresholding.hpp"

using namespace grpss;

namespace {

MatrixXd random_matrix(int n, int p, RngStream& rng) {
  MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

VectorXd random_vector(int n, RngStream& rng) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

GroupedDesign random_instance(RngStream& rng, std::vector<int>* sizes_out = nullptr) {
  const int G = 2 + static_cast<int>(rng.uniform() * 5.0);
  std::vector<int> sizes;
  for (int g = 0; g < G; ++g) sizes.push_back(1 + static_cast<int>(rng.uniform() * 4.0));
  const int p = std::accumulate(sizes.begin(), sizes.end(), 0);
  const int n = p + 10 + static_cast<int>(rng.uniform() * 30.0);
  MatrixXd X = random_matrix(n, p, rng);
  VectorXd beta = random_vector(p, rng);
  for (int j = 0; j < p; ++j)
    if (rng.uniform() < 0.4) beta[j] = 0.0;
  VectorXd y = X * beta + random_vector(n, rng);
  if (sizes_out) *sizes_out = sizes;
  return make_design(X, y, sizes);
}

double lambda_max_of(const GroupedDesign& d) {
  double lmax = 0.0;
  for (int g = 0; g < d.G(); ++g) lmax = std::max(lmax, 2.0 * (d.Xg(g).transpose() * d.y).norm());
  return lmax;
}

// plain lasso by coordinate descent, used as an independent reference
VectorXd lasso_cd(const MatrixXd& X, const VectorXd& y, double lambda) {
  const int p = static_cast<int>(X.cols());
  VectorXd beta = VectorXd::Zero(p);
  VectorXd r = y;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (int j = 0; j < p; ++j) {
      const double xx = X.col(j).squaredNorm();
      const double z = X.col(j).dot(r) + xx * beta[j];
      const double t = lambda / 2.0;
      double next = 0.0;
      if (z > t)
        next = (z - t) / xx;
      else if (z < -t)
        next = (z + t) / xx;
      if (next != beta[j]) {
        r += X.col(j) * (beta[j] - next);
        change = std::max(change, std::abs(next - beta[j]));
        beta[j] = next;
      }
    }
    if (change < 1e-12) break;
  }
  return beta;
}

double objective(const GroupedDesign& d, const VectorXd& beta, double lambda1, double lambda2) {
  double val = (d.y - d.X * beta).squaredNorm() + lambda1 * beta.lpNorm<1>();
  for (int g = 0; g < d.G(); ++g)
    val += lambda2 * beta.segment(d.layout.offsets[g], d.layout.sizes[g]).norm();
  return val;
}

}  // namespace

TEST_CASE("penalized fits satisfy their subgradient conditions") {
  RngStream rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = random_instance(rng);
    const double lmax = lambda_max_of(d);
    if (trial % 2 == 0) {
      const double lambda = lmax * (0.02 + 0.9 * rng.uniform());
      auto fit = fit_group_lasso(d, lambda);
      REQUIRE(kkt_residual(d, fit.values, 0.0, lambda) <= 1e-6);
    } else {
      const double l1 = lmax * 0.4 * rng.uniform();
      const double l2 = lmax * 0.4 * rng.uniform();
      auto fit = fit_sparse_group_lasso(d, l1, l2);
      REQUIRE(kkt_residual(d, fit.values, l1, l2) <= 1e-6);
    }
  }
}

TEST_CASE("orthogonal designs reduce to the radial threshold") {
  RngStream rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 4 + static_cast<int>(rng.uniform() * 6.0);
    const int n = p + 12;
    MatrixXd raw = random_matrix(n, p, rng);
    Eigen::HouseholderQR<MatrixXd> qr(raw);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, p);
    MatrixXd X = std::sqrt(static_cast<double>(n)) * Q;
    VectorXd y = random_vector(n, rng);

    std::vector<int> sizes;
    int left = p;
    while (left > 0) {
      int m = std::min(left, 1 + static_cast<int>(rng.uniform() * 3.0));
      sizes.push_back(m);
      left -= m;
    }
    auto d = make_design(X, y, sizes);
    auto beta_ls = make_coefficients(X.transpose() * y / n, d.layout);

    const double lambda = lambda_max_of(d) * rng.uniform();
    auto fit = fit_group_lasso(d, lambda, {1e-12, 1e-10, 100000});
    auto closed = group_lasso_threshold(beta_ls, n, lambda / 2.0);
    for (int j = 0; j < p; ++j) CHECK(fit.values[j] == Catch::Approx(closed.values[j]).margin(1e-10));
  }
}

TEST_CASE("zero penalty recovers least squares") {
  RngStream rng(103);
  MatrixXd X = random_matrix(35, 7, rng);
  VectorXd y = random_vector(35, rng);
  auto d = make_design(X, y, {3, 2, 2});

  auto fit = fit_group_lasso(d, 0.0, {1e-12, 2e-9, 100000});
  VectorXd r = y - X * fit.values;
  CHECK((X.transpose() * r).cwiseAbs().maxCoeff() <= 1e-8);

  auto ols = fit_ols(d);
  for (int j = 0; j < 7; ++j) CHECK(fit.values[j] == Catch::Approx(ols.values[j]).margin(1e-7));
}

TEST_CASE("penalty at the subgradient bound zeroes everything") {
  RngStream rng(104);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_instance(rng);
    const double lmax = lambda_max_of(d);
    CHECK(fit_group_lasso(d, lmax).values.isZero(0.0));
    CHECK(fit_group_lasso(d, 1.1 * lmax).values.isZero(0.0));
    CHECK_FALSE(fit_group_lasso(d, 0.9 * lmax).values.isZero(0.0));
  }
}

TEST_CASE("sparse fits agree with a lasso reference") {
  RngStream rng(105);
  MatrixXd X = random_matrix(30, 6, rng);
  VectorXd beta_true(6);
  beta_true << 2.0, 0.0, -1.5, 0.0, 0.0, 1.0;
  VectorXd y = X * beta_true + random_vector(30, rng);

  SECTION("singleton groups add the two penalties") {
    auto d = make_design(X, y, {1, 1, 1, 1, 1, 1});
    const double l1 = 4.0, l2 = 7.0;
    auto fit = fit_sparse_group_lasso(d, l1, l2, {1e-12, 1e-9, 100000});
    VectorXd ref = lasso_cd(X, y, l1 + l2);
    for (int j = 0; j < 6; ++j) CHECK(fit.values[j] == Catch::Approx(ref[j]).margin(1e-8));
  }

  SECTION("no group penalty leaves a plain lasso problem") {
    auto d = make_design(X, y, {3, 3});
    const double l1 = 9.0;
    auto fit = fit_sparse_group_lasso(d, l1, 0.0, {1e-12, 1e-9, 100000});
    VectorXd ref = lasso_cd(X, y, l1);
    for (int j = 0; j < 6; ++j) CHECK(fit.values[j] == Catch::Approx(ref[j]).margin(1e-8));
  }

  SECTION("no coordinate penalty matches the group fit") {
    auto d = make_design(X, y, {2, 2, 2});
    auto sparse = fit_sparse_group_lasso(d, 0.0, 11.0, {1e-12, 1e-9, 100000});
    auto plain = fit_group_lasso(d, 11.0, {1e-12, 1e-9, 100000});
    for (int j = 0; j < 6; ++j) CHECK(sparse.values[j] == Catch::Approx(plain.values[j]).margin(1e-8));
  }
}

TEST_CASE("objective never increases across sweeps") {
  RngStream rng(106);
  for (int trial = 0; trial < 5; ++trial) {
    auto d = random_instance(rng);
    const double lmax = lambda_max_of(d);
    const double l1 = 0.1 * lmax * rng.uniform();
    const double l2 = 0.3 * lmax * rng.uniform();

    auto bd = freq_detail::BlockData::make(d);
    VectorXd beta = random_vector(d.p(), rng);
    VectorXd r = d.y - d.X * beta;
    double prev = objective(d, beta, l1, l2);
    for (int s = 0; s < 40; ++s) {
      freq_detail::sweep(d, bd, l1, l2, beta, r);
      const double cur = objective(d, beta, l1, l2);
      REQUIRE(cur <= prev + 1e-9 * std::abs(prev));
      prev = cur;
    }
  }
}

TEST_CASE("penalty grids are descending and anchored at the zeroing point") {
  RngStream rng(107);
  auto d = random_instance(rng);

  auto grid = group_lasso_grid(d, 40);
  REQUIRE(grid.points.size() == 40);
  for (size_t i = 1; i < grid.points.size(); ++i)
    CHECK(grid.points[i].total() < grid.points[i - 1].total());
  CHECK(fit_group_lasso(d, grid.points.front().lambda2).values.isZero(0.0));

  auto sgrid = sparse_group_lasso_grid(d, 0.5, 40);
  REQUIRE(sgrid.points.size() == 40);
  auto top = fit_sparse_group_lasso(d, sgrid.points.front().lambda1, sgrid.points.front().lambda2);
  CHECK(top.values.isZero(0.0));
  for (auto& pt : sgrid.points) CHECK(pt.lambda1 == Catch::Approx(pt.lambda2).epsilon(1e-12));

  CHECK_THROWS_AS(sparse_group_lasso_grid(d, 0.0), InvalidParameter);
  CHECK_THROWS_AS(sparse_group_lasso_grid(d, 1.0), InvalidParameter);

  GroupedDesign null_d = make_design(MatrixXd::Zero(6, 2), VectorXd::Zero(6), {2});
  CHECK_THROWS_AS(group_lasso_grid(null_d), DegenerateEstimate);

  PenaltyGrid bad;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad.points = {{0.0, 1.0}, {0.0, 2.0}};
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("cross validation basics") {
  RngStream rng(108);
  auto d = random_instance(rng);

  PenaltyGrid one;
  one.points = {{0.0, 3.0}};
  RngStream cv_rng(1);
  auto res = cross_validate(d, one, 5, cv_rng);
  CHECK(res.best.lambda2 == 3.0);
  CHECK(res.curve.size() == 1);

  RngStream r2(2);
  CHECK_THROWS_AS(cross_validate(d, one, 1, r2), InsufficientData);
  auto tiny = make_design(MatrixXd::Ones(3, 1), VectorXd::Ones(3), {1});
  RngStream r3(3);
  CHECK_THROWS_AS(cross_validate(tiny, one, 4, r3), InsufficientData);
}

TEST_CASE("cv ties go to the heavier penalty") {
  RngStream rng(109);
  auto d = random_instance(rng);
  const double lmax = lambda_max_of(d);

  // both points zero every fold's fit, so the curves tie exactly
  PenaltyGrid grid;
  grid.points = {{0.0, 3.0 * lmax}, {0.0, 2.0 * lmax}};
  RngStream cv_rng(11);
  auto res = cross_validate(d, grid, 5, cv_rng);
  CHECK(res.best.lambda2 == 3.0 * lmax);
  CHECK(res.curve[0] == Catch::Approx(res.curve[1]).epsilon(1e-14));
}

TEST_CASE("cross validation prefers heavy penalties on pure noise") {
  int top_end = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(110, s);
    MatrixXd X = random_matrix(40, 8, rng);
    VectorXd y = random_vector(40, rng);
    auto d = make_design(X, y, {2, 2, 2, 2});
    auto grid = group_lasso_grid(d, 30);
    auto res = cross_validate(d, grid, 5, rng);
    int idx = 0;
    for (size_t i = 0; i < grid.points.size(); ++i)
      if (grid.points[i].total() == res.best.total()) idx = static_cast<int>(i);
    if (idx < 8) ++top_end;
  }
  CHECK(top_end >= 40);
}

TEST_CASE("cv-tuned group lasso stays dense on correlated designs") {
  // group selection keeps whole blocks, and prediction-optimal penalties are
  // weak, so null coordinates flood in
  auto spec = example_spec(1);
  std::vector<char> truth_flags(spec.beta.size());
  for (int j = 0; j < spec.beta.size(); ++j) truth_flags[j] = spec.beta[j] != 0.0;
  auto truth = pattern_from_coef_flags(truth_flags, make_layout(spec.group_sizes));

  double fpr_sum = 0.0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream data_rng(111, stream_for(1, rep, 0));
    auto ex = generate_example(1, data_rng);
    auto scaler = Standardizer::fit(ex.train);
    auto d = scaler.transform(ex.train);

    RngStream cv_rng(111, stream_for(1, rep, 1));
    auto grid = group_lasso_grid(d);
    auto res = cross_validate(d, grid, 5, cv_rng);
    auto fit = fit_group_lasso(d, res.best.lambda2);

    std::vector<char> flags(d.p());
    for (int j = 0; j < d.p(); ++j) flags[j] = fit.values[j] != 0.0;
    auto sel = pattern_from_coef_flags(flags, d.layout);
    auto rates = tpr_fpr(sel, truth, Level::coefficient);
    REQUIRE(rates.fpr.has_value());
    fpr_sum += *rates.fpr;
  }
  CHECK(fpr_sum / reps >= 0.45);
}

TEST_CASE("least squares baseline") {
  VectorXd y(5);
  y << 1.0, -2.0, 0.5, 3.0, 0.0;
  auto ident = make_design(MatrixXd::Identity(5, 5), y, {5});
  auto fit = fit_ols(ident);
  for (int j = 0; j < 5; ++j) CHECK(fit.values[j] == Catch::Approx(y[j]).margin(1e-12));

  // quadratic trend recovered exactly
  MatrixXd X(12, 3);
  for (int i = 0; i < 12; ++i) {
    const double t = -1.0 + 2.0 * i / 11.0;
    X(i, 0) = 1.0;
    X(i, 1) = t;
    X(i, 2) = t * t;
  }
  VectorXd coef(3);
  coef << 2.0, -1.0, 0.5;
  auto quad = make_design(X, X * coef, {1, 1, 1});
  auto qfit = fit_ols(quad);
  for (int j = 0; j < 3; ++j) CHECK(qfit.values[j] == Catch::Approx(coef[j]).margin(1e-8));

  RngStream rng(112);
  auto wide = generate_example(2, rng);
  CHECK_THROWS_AS(fit_ols(wide.train), RankDeficient);
}
