#pragma once

// Group-level spike-and-slab group lasso, sampled by systematic-scan Gibbs.
// Sweep order: beta groups ascending, tau2 groups ascending, sigma2, pi0.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "grpss/chain.hpp"
#include "grpss/model.hpp"
#include "grpss/random.hpp"

namespace grpss {

struct BglState {
  VectorXd beta;        // p
  std::vector<char> z;  // z[g] true = group g in the slab
  VectorXd tau2;        // G
  double sigma2 = 1.0;
  double pi0 = 0.5;
  double lambda = 1.0;
};

// Full conditional of one coefficient group: mixture of a point mass at zero
// (weight spike_prob) and N(mu, sigma2 * A^{-1}) with A = X_g'X_g + I/tau2.
struct GroupConditional {
  double spike_prob = 0.0;
  VectorXd mu;
  Eigen::LLT<MatrixXd> lltA;
};

// w = X_g' r_g where r_g is the residual with group g excluded.
inline GroupConditional group_conditional(const MatrixXd& XtXg, const VectorXd& w, double tau2,
                                          double sigma2, double pi0) {
  if (!(tau2 > 0.0) || !(sigma2 > 0.0)) throw InvalidParameter("group_conditional: tau2, sigma2 must be > 0");
  if (pi0 < 0.0 || pi0 > 1.0) throw InvalidParameter("group_conditional: pi0 outside [0,1]");
  const int m = static_cast<int>(XtXg.rows());
  GroupConditional out;
  MatrixXd A = XtXg;
  A.diagonal().array() += 1.0 / tau2;
  out.lltA.compute(A);
  if (out.lltA.info() != Eigen::Success) throw SingularCovariance("group conditional: Cholesky failed");
  out.mu = out.lltA.solve(w);

  if (pi0 == 0.0) {
    out.spike_prob = 0.0;
  } else if (pi0 == 1.0) {
    out.spike_prob = 1.0;
  } else {
    const MatrixXd& L = out.lltA.matrixLLT();
    double log_det_L = 0.0;
    for (int i = 0; i < m; ++i) log_det_L += std::log(L(i, i));
    VectorXd v = out.lltA.matrixL().solve(w);
    const double quad = v.squaredNorm();
    const double log_bf = -0.5 * m * std::log(tau2) - log_det_L + quad / (2.0 * sigma2);
    const double log_odds = std::log1p(-pi0) - std::log(pi0) + log_bf;
    out.spike_prob = log_odds > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(log_odds));
  }
  return out;
}

// Convenience form computing the excluded-group residual from scratch.
inline GroupConditional beta_group_conditional(const BglState& st, const GroupedDesign& d, int g) {
  if (g < 0 || g >= d.G()) throw IndexOutOfRange("beta_group_conditional: group out of range");
  const int off = d.layout.offsets[g];
  const int m = d.layout.sizes[g];
  VectorXd beta_rest = st.beta;
  beta_rest.segment(off, m).setZero();
  VectorXd r = d.y - d.X * beta_rest;
  auto Xg = d.Xg(g);
  return group_conditional(Xg.transpose() * Xg, Xg.transpose() * r, st.tau2[g], st.sigma2, st.pi0);
}

namespace bgl {

struct Workspace {
  std::vector<MatrixXd> XtX;  // per-group Gram blocks
  VectorXd resid;             // y - X beta, kept current

  static Workspace make(const GroupedDesign& d, const VectorXd& beta) {
    Workspace ws;
    ws.XtX.reserve(d.G());
    for (int g = 0; g < d.G(); ++g) {
      auto Xg = d.Xg(g);
      ws.XtX.push_back(Xg.transpose() * Xg);
    }
    ws.resid = d.y - d.X * beta;
    return ws;
  }
};

inline void step_beta_group(BglState& st, const GroupedDesign& d, Workspace& ws, int g, RngStream& rng) {
  const auto& lay = d.layout;
  const int off = lay.offsets[g];
  const int m = lay.sizes[g];
  auto beta_g = st.beta.segment(off, m);

  // residual with group g excluded enters only through X_g' r_g
  VectorXd w = d.Xg(g).transpose() * ws.resid + ws.XtX[g] * beta_g;

  GroupConditional cond = group_conditional(ws.XtX[g], w, st.tau2[g], st.sigma2, st.pi0);
  VectorXd old = beta_g;
  if (rng.uniform() < cond.spike_prob) {
    beta_g.setZero();
    st.z[g] = false;
  } else {
    VectorXd xi(m);
    for (int j = 0; j < m; ++j) xi[j] = rng.normal();
    VectorXd dev = cond.lltA.matrixU().solve(xi);
    beta_g = cond.mu + std::sqrt(st.sigma2) * dev;
    st.z[g] = true;
  }
  if (st.z[g] || old.squaredNorm() != 0.0) ws.resid.noalias() += d.Xg(g) * (old - beta_g);
}

inline void step_tau2(BglState& st, const GroupedDesign& d, int g, RngStream& rng) {
  const int m = d.layout.sizes[g];
  const double lam2 = st.lambda * st.lambda;
  const double norm = st.beta.segment(d.layout.offsets[g], m).norm();
  if (!st.z[g] || norm == 0.0) {
    // spike branch: tau2 reverts to its Gamma((m+1)/2, lambda^2/2) prior
    st.tau2[g] = rng.gamma(0.5 * (m + 1), 0.5 * lam2);
  } else {
    // mean clamp keeps the draw finite when the slab lands next to zero
    double mean = std::min(st.lambda * std::sqrt(st.sigma2) / norm, 1e12);
    st.tau2[g] = 1.0 / rng.inv_gaussian(mean, lam2);
  }
}

inline void step_sigma2(BglState& st, const GroupedDesign& d, const Workspace& ws, const SamplerConfig& cfg,
                        RngStream& rng) {
  double shape = 0.5 * d.n() + cfg.sigma_prior_shape.value_or(0.0);
  double rate = 0.5 * ws.resid.squaredNorm() + cfg.sigma_prior_rate.value_or(0.0);
  for (int g = 0; g < d.G(); ++g) {
    if (!st.z[g]) continue;  // spiked groups contribute nothing
    shape += 0.5 * d.layout.sizes[g];
    rate += 0.5 * st.beta.segment(d.layout.offsets[g], d.layout.sizes[g]).squaredNorm() / st.tau2[g];
  }
  st.sigma2 = rng.inv_gamma(shape, rate);
}

inline void step_pi0(BglState& st, const GroupedDesign& d, const SamplerConfig& cfg, RngStream& rng) {
  int nonzero = 0;
  for (char zg : st.z) nonzero += (zg != 0);
  const int zero = d.G() - nonzero;
  st.pi0 = rng.beta(cfg.beta_a + zero, cfg.beta_b + nonzero);
}

inline void sweep(BglState& st, const GroupedDesign& d, Workspace& ws, const SamplerConfig& cfg,
                  RngStream& rng) {
  for (int g = 0; g < d.G(); ++g) step_beta_group(st, d, ws, g, rng);
  if (!cfg.fixed_tau2)
    for (int g = 0; g < d.G(); ++g) step_tau2(st, d, g, rng);
  if (!cfg.fixed_sigma2) step_sigma2(st, d, ws, cfg, rng);
  if (!cfg.fixed_pi0) step_pi0(st, d, cfg, rng);
}

inline BglState init_state(const GroupedDesign& d, const SamplerConfig& cfg) {
  BglState st;
  MatrixXd A = d.X.transpose() * d.X;
  A.diagonal().array() += 1.0;
  st.beta = Eigen::LDLT<MatrixXd>(A).solve(d.X.transpose() * d.y);
  st.z.assign(d.G(), true);
  st.tau2 = cfg.fixed_tau2 ? *cfg.fixed_tau2 : VectorXd::Ones(d.G());
  if (st.tau2.size() != d.G()) throw DimensionMismatch("fixed_tau2 length != number of groups");
  double rss = (d.y - d.X * st.beta).squaredNorm();
  st.sigma2 = cfg.fixed_sigma2 ? *cfg.fixed_sigma2 : std::max(rss / d.n(), 1e-8);
  st.pi0 = cfg.fixed_pi0 ? *cfg.fixed_pi0 : 0.5;
  st.lambda = cfg.fixed_lambda ? *cfg.fixed_lambda : cfg.lambda_init;
  return st;
}

}  // namespace bgl

// lambda^(k) = sqrt((p + G) / E[sum_g tau_g^2 | Y]); the expectation is a
// Monte Carlo average from the previous round's chain.
inline double em_lambda_update(int p, int G, double mean_sum_tau2) {
  if (!(mean_sum_tau2 > 0.0) || !std::isfinite(mean_sum_tau2))
    throw DegenerateEstimate("EM update: mean sum of tau2 must be positive and finite");
  return std::sqrt((p + G) / mean_sum_tau2);
}

// Runs the EM rounds in place, advancing state and rng.
inline EmResult mc_em_lambda(BglState& st, const GroupedDesign& d, bgl::Workspace& ws,
                             const SamplerConfig& cfg, RngStream& rng) {
  EmResult res;
  res.lambda = st.lambda;
  for (int round = 0; round < cfg.em_rounds; ++round) {
    const int keep_from = cfg.em_inner_iters / 2;  // average over the back half
    double acc = 0.0;
    int kept = 0;
    for (int it = 0; it < cfg.em_inner_iters; ++it) {
      bgl::sweep(st, d, ws, cfg, rng);
      if (it >= keep_from) {
        acc += st.tau2.sum();
        ++kept;
      }
    }
    st.lambda = em_lambda_update(d.p(), d.G(), acc / kept);
    res.trajectory.push_back(st.lambda);
  }
  res.lambda = st.lambda;
  return res;
}

inline ChainDraws run_bgl_ss(const GroupedDesign& d, const SamplerConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed, cfg.stream);
  BglState st = bgl::init_state(d, cfg);
  bgl::Workspace ws = bgl::Workspace::make(d, st.beta);

  ChainDraws out;
  out.layout = d.layout;
  out.n_iter = cfg.n_iter;
  out.n_burn = cfg.n_burn;

  if (!cfg.fixed_lambda && cfg.em_rounds > 0) {
    EmResult em = mc_em_lambda(st, d, ws, cfg, rng);
    out.lambda_trajectory = em.trajectory;
  }
  out.lambda_used = st.lambda;

  const int G = d.G();
  const int stored = cfg.n_iter - cfg.n_burn;
  out.beta.resize(stored, d.p());
  out.extras.resize(stored, G + 2);
  out.extra_names.clear();
  for (int g = 0; g < G; ++g) out.extra_names.push_back("tau2_" + std::to_string(g));
  out.extra_names.push_back("sigma2");
  out.extra_names.push_back("pi0");

  for (int it = 0; it < cfg.n_iter; ++it) {
    bgl::sweep(st, d, ws, cfg, rng);
    if (it >= cfg.n_burn) {
      const int r = it - cfg.n_burn;
      out.beta.row(r) = st.beta.transpose();
      for (int g = 0; g < G; ++g) out.extras(r, g) = st.tau2[g];
      out.extras(r, G) = st.sigma2;
      out.extras(r, G + 1) = st.pi0;
    }
  }
  return out;
}

}  // namespace grpss
