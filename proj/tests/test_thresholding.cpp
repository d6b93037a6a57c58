#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "grpss/bgl_ss.hpp"
#include "grpss/random.hpp"
#include "grpss/thresholding.hpp"
#include "support/stats.hpp"

using namespace grpss;

namespace {

OrthogonalContext make_ctx(long n, double sigma2, std::vector<double> tau2, double pi0,
                           VectorXd beta, std::vector<int> sizes) {
  OrthogonalContext ctx;
  ctx.n = n;
  ctx.sigma2 = sigma2;
  ctx.tau2 = Eigen::Map<VectorXd>(tau2.data(), static_cast<long>(tau2.size()));
  ctx.pi0 = pi0;
  ctx.beta_ls = make_coefficients(std::move(beta), make_layout(sizes));
  return ctx;
}

}  // namespace

TEST_CASE("spike_prob endpoints and a hand-checked value") {
  // beta_g = 0, m = 2, n*tau2 = 99: Bayes factor is (1+99)^{-1} so the
  // posterior spike weight at pi0 = 1/2 is 100/101.
  auto ctx = make_ctx(99, 1.0, {1.0}, 0.5, VectorXd::Zero(2), {2});
  CHECK(spike_prob(ctx, 0) == Catch::Approx(100.0 / 101.0).epsilon(1e-12));

  ctx.pi0 = 0.0;
  CHECK(spike_prob(ctx, 0) == 0.0);
  ctx.pi0 = 1.0;
  CHECK(spike_prob(ctx, 0) == 1.0);

  ctx.pi0 = 0.5;
  CHECK_THROWS_AS(spike_prob(ctx, 1), InvalidParameter);
  CHECK_THROWS_AS(spike_prob(ctx, -1), InvalidParameter);

  auto bad = ctx;
  bad.tau2 = VectorXd::Ones(2);
  CHECK_THROWS_AS(spike_prob(bad, 0), DimensionMismatch);
}

TEST_CASE("spike_prob matches the direct formula away from the overflow guard") {
  VectorXd b(3);
  b << 0.2, -0.1, 0.4;
  auto ctx = make_ctx(50, 2.0, {0.7}, 0.3, b, {3});

  const double nt = 50.0 * 0.7;
  const double B = 1.0 / (1.0 + nt);
  const double bf = std::pow(1.0 + nt, -1.5) * std::exp((1.0 - B) * 50.0 * b.squaredNorm() / (2.0 * 2.0));
  const double direct = ctx.pi0 / (ctx.pi0 + (1.0 - ctx.pi0) * bf);
  CHECK(spike_prob(ctx, 0) == Catch::Approx(direct).epsilon(1e-10));
}

TEST_CASE("median_threshold zeroes a group once the spike weight passes one half") {
  auto ctx = make_ctx(99, 1.0, {1.0}, 0.5, VectorXd::Zero(2), {2});
  REQUIRE(spike_prob(ctx, 0) > 0.5);
  auto med = median_threshold(ctx);
  CHECK(med.values[0] == 0.0);
  CHECK(med.values[1] == 0.0);
}

TEST_CASE("median_threshold reduces to least squares in the flat-slab limit") {
  VectorXd b(2);
  b << 0.7, -0.3;
  auto ctx = make_ctx(1, 1.0, {1e300}, 0.0, b, {2});
  auto med = median_threshold(ctx);
  CHECK(med.values[0] == Catch::Approx(0.7).epsilon(1e-12));
  CHECK(med.values[1] == Catch::Approx(-0.3).epsilon(1e-12));

  // pi0 = 0 with a finite slab: Q = 0 so the rule is pure ridge shrinkage.
  auto ridge = make_ctx(10, 1.0, {2.0}, 0.0, b, {2});
  const double keep = 1.0 - 1.0 / (1.0 + 10.0 * 2.0);
  auto shrunk = median_threshold(ridge);
  CHECK(shrunk.values[0] == Catch::Approx(keep * 0.7).epsilon(1e-14));
  CHECK(shrunk.values[1] == Catch::Approx(keep * -0.3).epsilon(1e-14));
}

TEST_CASE("median_threshold matches the median of the simulated posterior mixture") {
  VectorXd b(1);
  b << 0.3;
  auto ctx = make_ctx(100, 1.0, {1.0}, 0.5, b, {1});

  const double l = spike_prob(ctx, 0);
  REQUIRE(l < 0.5);
  const double B = 1.0 / (1.0 + 100.0 * 1.0);
  const double mu = (1.0 - B) * 0.3;
  const double sd = std::sqrt((1.0 - B) / 100.0);

  const int N = 200000;
  RngStream rng(91);
  std::vector<double> draws(N);
  for (int i = 0; i < N; ++i)
    draws[i] = (rng.uniform() < l) ? 0.0 : mu + sd * rng.normal();
  const double emp = teststat::median_of(draws);

  const double predicted = median_threshold(ctx).values[0];
  REQUIRE(predicted > 0.0);
  // sampling error of the empirical median via the mixture density there
  const double dens = (1.0 - l) * norm_pdf((predicted - mu) / sd) / sd;
  const double se = 1.0 / (2.0 * dens * std::sqrt(static_cast<double>(N)));
  CHECK(std::abs(emp - predicted) < 3.0 * se);
}

TEST_CASE("spike_prob agrees with the Gibbs conditional on an orthogonal design") {
  RngStream rng(314);
  const long n = 40;
  const std::vector<int> sizes{2, 3, 1};
  MatrixXd raw(n, 6);
  for (int i = 0; i < raw.rows(); ++i)
    for (int j = 0; j < raw.cols(); ++j) raw(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(raw);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, 6);
  MatrixXd X = std::sqrt(static_cast<double>(n)) * Q;  // X'X = n I
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();

  auto d = make_design(X, y, sizes);
  VectorXd beta_ls = X.transpose() * y / static_cast<double>(n);
  auto ctx = make_ctx(n, 1.7, {0.5, 1.3, 2.0}, 0.35, beta_ls, sizes);

  for (int g = 0; g < 3; ++g) {
    const MatrixXd Xg = d.Xg(g);
    auto cond = group_conditional(Xg.transpose() * Xg, Xg.transpose() * y, ctx.tau2[g], 1.7, 0.35);
    CHECK(cond.spike_prob == Catch::Approx(spike_prob(ctx, g)).margin(1e-8));

    const double shrink = 1.0 - 1.0 / (1.0 + n * ctx.tau2[g]);
    VectorXd mu_closed = shrink * ctx.beta_ls.group(g);
    CHECK((cond.mu - mu_closed).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("group_lasso_threshold hand values and exact boundary") {
  VectorXd b(2);
  b << 3.0, 4.0;
  auto beta = make_coefficients(b, make_layout({2}));

  auto identity = group_lasso_threshold(beta, 10, 0.0);
  CHECK(identity.values == b);

  // ||b|| = 5, lambda/n = 0.5: radial factor 0.9
  auto shrunk = group_lasso_threshold(beta, 10, 5.0);
  CHECK(shrunk.values[0] == Catch::Approx(2.7).epsilon(1e-14));
  CHECK(shrunk.values[1] == Catch::Approx(3.6).epsilon(1e-14));

  VectorXd small(2);
  small << 0.3, 0.4;  // ||.|| = 0.5 = lambda/n exactly
  auto at_edge = group_lasso_threshold(make_coefficients(small, make_layout({2})), 10, 5.0);
  CHECK(at_edge.values[0] == 0.0);
  CHECK(at_edge.values[1] == 0.0);

  auto past_edge = group_lasso_threshold(make_coefficients(small, make_layout({2})), 10, 8.0);
  CHECK(past_edge.values.isZero(0.0));

  auto zero_in = group_lasso_threshold(make_coefficients(VectorXd::Zero(2), make_layout({2})), 10, 5.0);
  CHECK(zero_in.values.isZero(0.0));

  CHECK_THROWS_AS(group_lasso_threshold(beta, 0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(group_lasso_threshold(beta, 10, -1.0), InvalidParameter);
}

TEST_CASE("median estimate never exceeds least squares and keeps its sign") {
  RngStream rng(555);
  const std::vector<int> sizes{1, 2, 3};
  for (int rep = 0; rep < 300; ++rep) {
    VectorXd b(6);
    for (int j = 0; j < 6; ++j) b[j] = 3.0 * rng.normal();
    const long n = 5 + static_cast<long>(rng.uniform() * 495.0);
    std::vector<double> tau2(3);
    for (auto& t : tau2) t = std::exp(-2.0 + 5.0 * rng.uniform());
    auto ctx = make_ctx(n, std::exp(-1.0 + 3.0 * rng.uniform()), tau2, rng.uniform(), b, sizes);

    auto med = median_threshold(ctx);
    for (int j = 0; j < 6; ++j) {
      CHECK(std::abs(med.values[j]) <= std::abs(b[j]));
      CHECK(med.values[j] * b[j] >= 0.0);
    }
  }
}

TEST_CASE("median_threshold zero set is an interval around the origin") {
  VectorXd dir(2);
  dir << 0.6, -0.8;
  std::vector<bool> zeroed;
  for (int k = 0; k <= 600; ++k) {
    const double s = 0.005 * k;
    auto ctx = make_ctx(50, 1.0, {1.0}, 0.6, s * dir, {2});
    zeroed.push_back(median_threshold(ctx).values.isZero(0.0));
  }
  REQUIRE(zeroed.front());
  REQUIRE_FALSE(zeroed.back());
  // once the scan leaves the zero region it never comes back
  bool left = false;
  bool contiguous = true;
  for (bool z : zeroed) {
    if (!z) left = true;
    if (left && z) contiguous = false;
  }
  CHECK(contiguous);
}

TEST_CASE("selection accuracy improves with n under the spreading-slab scaling") {
  VectorXd truth(4);
  truth << 1.0, 0.15, 0.0, 0.0;
  const std::vector<int> sizes{1, 1, 1, 1};
  RngStream rng(2024);

  double prev = -1.0;
  double final_acc = 0.0;
  for (long n : {50L, 500L, 5000L}) {
    const double tau2 = std::pow(static_cast<double>(n), 0.75);
    int hits = 0;
    for (int rep = 0; rep < 200; ++rep) {
      VectorXd beta_ls(4);
      for (int j = 0; j < 4; ++j)
        beta_ls[j] = truth[j] + rng.normal() / std::sqrt(static_cast<double>(n));
      auto ctx = make_ctx(n, 1.0, {tau2, tau2, tau2, tau2}, 0.5, beta_ls, sizes);
      auto med = median_threshold(ctx);
      bool match = true;
      for (int j = 0; j < 4; ++j)
        if ((med.values[j] != 0.0) != (truth[j] != 0.0)) match = false;
      hits += match;
    }
    const double acc = hits / 200.0;
    CHECK(acc >= prev);
    prev = acc;
    final_acc = acc;
  }
  CHECK(final_acc >= 0.99);
}

TEST_CASE("root-n penalty leaves the group lasso zero rate bounded away from one") {
  // with lambda_n = lambda0 sqrt(n) a null group of size 2 is zeroed iff
  // z1^2 + z2^2 <= lambda0^2, a fixed probability for every n
  const double lambda0 = 1.5;
  const double expected = 1.0 - std::exp(-lambda0 * lambda0 / 2.0);
  RngStream rng(777);
  for (long n : {100L, 10000L}) {
    int zero_count = 0;
    for (int rep = 0; rep < 200; ++rep) {
      VectorXd beta_ls(2);
      beta_ls << rng.normal() / std::sqrt(static_cast<double>(n)),
          rng.normal() / std::sqrt(static_cast<double>(n));
      auto out = group_lasso_threshold(make_coefficients(beta_ls, make_layout({2})), n,
                                       lambda0 * std::sqrt(static_cast<double>(n)));
      zero_count += out.values.isZero(0.0);
    }
    const double rate = zero_count / 200.0;
    CHECK(rate <= 0.95);
    CHECK(std::abs(rate - expected) < 4.0 * std::sqrt(expected * (1.0 - expected) / 200.0));
  }
}
