#pragma once

// Closed-form posterior selection rules for orthogonal designs (X'X = nI).

#include <cmath>

#include "grpss/model.hpp"
#include "grpss/special.hpp"

namespace grpss {

// Everything the closed forms need; beta_ls is the least-squares estimate
// X'y / n under the orthogonality assumption.
struct OrthogonalContext {
  long n = 0;
  double sigma2 = 1.0;
  VectorXd tau2;  // one slab variance per group
  double pi0 = 0.5;
  GroupedCoefficients beta_ls;

  void validate() const {
    if (n <= 0) throw InvalidParameter("orthogonal context: n must be > 0");
    if (!(sigma2 > 0.0)) throw InvalidParameter("orthogonal context: sigma2 must be > 0");
    if (pi0 < 0.0 || pi0 > 1.0) throw InvalidParameter("orthogonal context: pi0 outside [0,1]");
    if (tau2.size() != beta_ls.layout.groups())
      throw DimensionMismatch("orthogonal context: tau2 length != number of groups");
    for (int g = 0; g < tau2.size(); ++g)
      if (!(tau2[g] > 0.0)) throw InvalidParameter("orthogonal context: tau2 must be > 0");
  }
};

// Posterior probability that group g sits in the spike. Log-space throughout;
// exact 0/1 at the pi0 endpoints.
inline double spike_prob(const OrthogonalContext& ctx, int g) {
  ctx.validate();
  if (g < 0 || g >= ctx.beta_ls.layout.groups()) throw InvalidParameter("spike_prob: group out of range");
  if (ctx.pi0 == 0.0) return 0.0;
  if (ctx.pi0 == 1.0) return 1.0;
  const double m = ctx.beta_ls.layout.sizes[g];
  const double nt = static_cast<double>(ctx.n) * ctx.tau2[g];
  const double B = 1.0 / (1.0 + nt);
  const double norm2 = ctx.beta_ls.group(g).squaredNorm();
  // log of the slab/spike Bayes factor
  const double log_bf = -0.5 * m * std::log1p(nt) + (1.0 - B) * ctx.n * norm2 / (2.0 * ctx.sigma2);
  const double log_odds = std::log1p(-ctx.pi0) - std::log(ctx.pi0) + log_bf;
  if (log_odds > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(log_odds));
}

// Marginal posterior median of each coefficient: soft-shrinkage of the LS
// estimate, exactly zero once the spike weight reaches 1/2.
inline GroupedCoefficients median_threshold(const OrthogonalContext& ctx) {
  ctx.validate();
  const GroupLayout& lay = ctx.beta_ls.layout;
  VectorXd out(lay.p);
  const double n = static_cast<double>(ctx.n);
  const double sigma = std::sqrt(ctx.sigma2);
  for (int g = 0; g < lay.groups(); ++g) {
    const double l = spike_prob(ctx, g);
    const double B = 1.0 / (1.0 + n * ctx.tau2[g]);
    const double Q = norm_quantile(1.0 / (2.0 * (1.0 - std::min(0.5, l))));
    const double shift = (sigma / std::sqrt(n)) * Q * std::sqrt(1.0 - B);
    for (int j = 0; j < lay.sizes[g]; ++j) {
      const double b = ctx.beta_ls.values[lay.offsets[g] + j];
      double mag = 0.0;
      if (std::isfinite(shift)) mag = std::max((1.0 - B) * std::abs(b) - shift, 0.0);
      out[lay.offsets[g] + j] = (b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0)) * mag;
    }
  }
  return make_coefficients(std::move(out), lay);
}

// Group-lasso solution under orthogonality: group g is zeroed iff
// n * ||beta_ls_g|| <= lambda_n, otherwise shrunk radially.
inline GroupedCoefficients group_lasso_threshold(const GroupedCoefficients& beta_ls, long n, double lambda_n) {
  if (n <= 0) throw InvalidParameter("group_lasso_threshold: n must be > 0");
  if (lambda_n < 0.0) throw InvalidParameter("group_lasso_threshold: lambda must be >= 0");
  const GroupLayout& lay = beta_ls.layout;
  VectorXd out(lay.p);
  for (int g = 0; g < lay.groups(); ++g) {
    const double norm = beta_ls.group_norm(g);
    double factor = 0.0;
    if (norm > 0.0) factor = std::max(1.0 - lambda_n / (static_cast<double>(n) * norm), 0.0);
    out.segment(lay.offsets[g], lay.sizes[g]) = factor * beta_ls.group(g);
  }
  return make_coefficients(std::move(out), lay);
}

}  // namespace grpss
