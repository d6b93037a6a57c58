#pragma once

// Bi-level spike-and-slab sampler. Coefficients are reparametrized as
// beta_gj = tau_gj * b_gj with a group spike on b_g and a coordinate spike on
// tau_gj (slab: positive part normal). Sweep order: b groups, tau coordinates
// (residual refreshed per coordinate), sigma2, pi0, pi1, s2.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "grpss/chain.hpp"
#include "grpss/model.hpp"
#include "grpss/random.hpp"
#include "grpss/special.hpp"

namespace grpss {

struct BsgsState {
  VectorXd b;    // p latent coefficients
  VectorXd tau;  // p scales (sd units), exact zeros allowed
  double sigma2 = 1.0;
  double pi0 = 0.5;
  double pi1 = 0.5;
  double s2 = 1.0;
  double t = 1.0;

  VectorXd beta() const { return tau.cwiseProduct(b); }
};

// Conditional of the latent group vector: mixture of delta_0 and
// N(mu, Sigma), Sigma = (I + sigma^-2 V^1/2 X'X V^1/2)^{-1}.
struct BGroupConditional {
  double spike_prob = 0.0;
  VectorXd mu;
  Eigen::LLT<MatrixXd> lltA;  // A = Sigma^{-1}
};

// w = V_g^{1/2} X_g' r_g with r_g the residual excluding group g.
inline BGroupConditional b_group_conditional(const MatrixXd& XtXg, const VectorXd& w,
                                             const VectorXd& tau_g, double sigma2, double pi0) {
  const int m = static_cast<int>(XtXg.rows());
  BGroupConditional out;
  MatrixXd A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = tau_g[i] * XtXg(i, j) * tau_g[j] / sigma2;
  A.diagonal().array() += 1.0;
  out.lltA.compute(A);
  if (out.lltA.info() != Eigen::Success) throw SingularCovariance("b conditional: Cholesky failed");
  out.mu = out.lltA.solve(w) / sigma2;

  if (pi0 == 0.0) {
    out.spike_prob = 0.0;
  } else if (pi0 == 1.0) {
    out.spike_prob = 1.0;
  } else {
    double log_det_L = 0.0;
    for (int i = 0; i < m; ++i) log_det_L += std::log(out.lltA.matrixLLT()(i, i));
    const double quad = out.lltA.matrixL().solve(w).squaredNorm();
    const double log_bf = -log_det_L + quad / (2.0 * sigma2 * sigma2);
    const double log_odds = std::log1p(-pi0) - std::log(pi0) + log_bf;
    out.spike_prob = log_odds > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(log_odds));
  }
  return out;
}

// Conditional of one tau coordinate: mixture of delta_0 and N+(u, v2).
struct TauConditional {
  double spike_prob = 0.0;  // q_gj
  double u = 0.0;
  double v2 = 1.0;
};

// rx = x_gj' r_gj with r_gj the residual excluding coefficient (g,j).
inline TauConditional tau_conditional(double xtx, double rx, double b, double sigma2, double s2,
                                      double pi1) {
  TauConditional out;
  out.v2 = 1.0 / (1.0 / s2 + b * b * xtx / sigma2);
  out.u = out.v2 * b * rx / sigma2;
  if (pi1 == 0.0) {
    out.spike_prob = 0.0;
  } else if (pi1 == 1.0) {
    out.spike_prob = 1.0;
  } else {
    const double z = out.u / std::sqrt(out.v2);
    const double log_slab = std::log(2.0) + 0.5 * std::log(out.v2 / s2) + 0.5 * z * z + log_norm_cdf(z);
    const double log_odds = std::log1p(-pi1) - std::log(pi1) + log_slab;
    out.spike_prob = log_odds > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(log_odds));
  }
  return out;
}

namespace bsgs {

struct Workspace {
  std::vector<MatrixXd> XtX;  // per-group blocks
  VectorXd xtx_diag;          // per-column x'x
  VectorXd resid;             // y - X beta

  static Workspace make(const GroupedDesign& d, const VectorXd& beta) {
    Workspace ws;
    for (int g = 0; g < d.G(); ++g) {
      auto Xg = d.Xg(g);
      ws.XtX.push_back(Xg.transpose() * Xg);
    }
    ws.xtx_diag = d.X.colwise().squaredNorm();
    ws.resid = d.y - d.X * beta;
    return ws;
  }
};

inline void step_b(BsgsState& st, const GroupedDesign& d, Workspace& ws, RngStream& rng) {
  for (int g = 0; g < d.G(); ++g) {
    const int off = d.layout.offsets[g];
    const int m = d.layout.sizes[g];
    auto b_g = st.b.segment(off, m);
    auto tau_g = st.tau.segment(off, m);
    VectorXd beta_old = tau_g.cwiseProduct(b_g);

    VectorXd rXg = d.Xg(g).transpose() * ws.resid + ws.XtX[g] * beta_old;
    VectorXd w = tau_g.cwiseProduct(rXg);

    BGroupConditional cond = b_group_conditional(ws.XtX[g], w, tau_g, st.sigma2, st.pi0);
    if (rng.uniform() < cond.spike_prob) {
      b_g.setZero();
    } else {
      VectorXd xi(m);
      for (int j = 0; j < m; ++j) xi[j] = rng.normal();
      b_g = cond.mu + cond.lltA.matrixU().solve(xi);
    }
    VectorXd beta_new = tau_g.cwiseProduct(b_g);
    ws.resid.noalias() += d.Xg(g) * (beta_old - beta_new);
  }
}

inline void step_tau(BsgsState& st, const GroupedDesign& d, Workspace& ws, RngStream& rng) {
  for (int j = 0; j < d.p(); ++j) {
    const double beta_old = st.tau[j] * st.b[j];
    const double rx = d.X.col(j).dot(ws.resid) + ws.xtx_diag[j] * beta_old;
    TauConditional cond = tau_conditional(ws.xtx_diag[j], rx, st.b[j], st.sigma2, st.s2, st.pi1);
    if (rng.uniform() < cond.spike_prob) {
      st.tau[j] = 0.0;
    } else {
      st.tau[j] = rng.trunc_normal_pos(cond.u, std::sqrt(cond.v2));
    }
    const double beta_new = st.tau[j] * st.b[j];
    if (beta_new != beta_old) ws.resid.noalias() += d.X.col(j) * (beta_old - beta_new);
  }
}

inline void step_sigma2(BsgsState& st, const GroupedDesign& d, const Workspace& ws,
                        const SamplerConfig& cfg, RngStream& rng) {
  double shape = 0.5 * d.n() + cfg.sigma_prior_shape.value_or(0.1);
  double rate = 0.5 * ws.resid.squaredNorm() + cfg.sigma_prior_rate.value_or(0.1);
  st.sigma2 = rng.inv_gamma(shape, rate);
}

inline void step_pi(BsgsState& st, const GroupedDesign& d, const SamplerConfig& cfg, RngStream& rng) {
  int zero_groups = 0;
  for (int g = 0; g < d.G(); ++g)
    if (st.b.segment(d.layout.offsets[g], d.layout.sizes[g]).isZero(0.0)) ++zero_groups;
  int zero_tau = 0;
  for (int j = 0; j < d.p(); ++j) zero_tau += (st.tau[j] == 0.0);
  if (!cfg.fixed_pi0) st.pi0 = rng.beta(cfg.beta_a + zero_groups, cfg.beta_b + (d.G() - zero_groups));
  if (!cfg.fixed_pi1) st.pi1 = rng.beta(cfg.beta_c1 + zero_tau, cfg.beta_c2 + (d.p() - zero_tau));
}

inline void step_s2(BsgsState& st, const GroupedDesign& d, RngStream& rng) {
  if (!(st.t > 0.0)) throw InvalidParameter("s2 conditional: t must be > 0");
  int nonzero = 0;
  double sumsq = 0.0;
  for (int j = 0; j < d.p(); ++j) {
    nonzero += (st.tau[j] != 0.0);
    sumsq += st.tau[j] * st.tau[j];
  }
  st.s2 = rng.inv_gamma(1.0 + 0.5 * nonzero, st.t + 0.5 * sumsq);
}

inline void sweep(BsgsState& st, const GroupedDesign& d, Workspace& ws, const SamplerConfig& cfg,
                  RngStream& rng) {
  step_b(st, d, ws, rng);
  step_tau(st, d, ws, rng);
  if (!cfg.fixed_sigma2) step_sigma2(st, d, ws, cfg, rng);
  step_pi(st, d, cfg, rng);
  if (!cfg.fixed_s2) step_s2(st, d, rng);
}

inline BsgsState init_state(const GroupedDesign& d, const SamplerConfig& cfg, RngStream& rng) {
  BsgsState st;
  st.b.resize(d.p());
  for (int j = 0; j < d.p(); ++j) st.b[j] = rng.normal();
  st.tau.resize(d.p());
  for (int j = 0; j < d.p(); ++j) st.tau[j] = std::abs(rng.normal());
  double ym = d.y.mean();
  double yv = (d.y.array() - ym).square().sum() / d.n();
  st.sigma2 = cfg.fixed_sigma2 ? *cfg.fixed_sigma2 : std::max(yv, 1e-8);
  st.pi0 = cfg.fixed_pi0.value_or(0.5);
  st.pi1 = cfg.fixed_pi1.value_or(0.5);
  st.s2 = cfg.fixed_s2.value_or(1.0);
  st.t = cfg.fixed_t.value_or(1.0);
  return st;
}

}  // namespace bsgs

// t^(k) = 1 / E[1/s^2 | Y], expectation estimated by the inner chain.
inline double em_t_update(double mean_inv_s2) {
  if (!(mean_inv_s2 > 0.0) || !std::isfinite(mean_inv_s2))
    throw DegenerateEstimate("EM update: mean of 1/s2 must be positive and finite");
  return 1.0 / mean_inv_s2;
}

inline EmResult mc_em_t(BsgsState& st, const GroupedDesign& d, bsgs::Workspace& ws,
                        const SamplerConfig& cfg, RngStream& rng) {
  EmResult res;
  res.lambda = st.t;
  for (int round = 0; round < cfg.em_rounds; ++round) {
    const int keep_from = cfg.em_inner_iters / 2;
    double acc = 0.0;
    int kept = 0;
    for (int it = 0; it < cfg.em_inner_iters; ++it) {
      bsgs::sweep(st, d, ws, cfg, rng);
      if (it >= keep_from) {
        acc += 1.0 / st.s2;
        ++kept;
      }
    }
    st.t = em_t_update(acc / kept);
    res.trajectory.push_back(st.t);
  }
  res.lambda = st.t;
  return res;
}

inline ChainDraws run_bsgs_ss(const GroupedDesign& d, const SamplerConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed, cfg.stream);
  BsgsState st = bsgs::init_state(d, cfg, rng);
  bsgs::Workspace ws = bsgs::Workspace::make(d, st.beta());

  ChainDraws out;
  out.layout = d.layout;
  out.n_iter = cfg.n_iter;
  out.n_burn = cfg.n_burn;

  if (!cfg.fixed_t && cfg.em_rounds > 0) {
    EmResult em = mc_em_t(st, d, ws, cfg, rng);
    out.lambda_trajectory = em.trajectory;
  }
  out.lambda_used = st.t;

  const int p = d.p();
  const int stored = cfg.n_iter - cfg.n_burn;
  out.beta.resize(stored, p);
  out.extras.resize(stored, 2 * p + 4);
  for (int j = 0; j < p; ++j) out.extra_names.push_back("b_" + std::to_string(j));
  for (int j = 0; j < p; ++j) out.extra_names.push_back("tau_" + std::to_string(j));
  out.extra_names.push_back("sigma2");
  out.extra_names.push_back("pi0");
  out.extra_names.push_back("pi1");
  out.extra_names.push_back("s2");

  for (int it = 0; it < cfg.n_iter; ++it) {
    bsgs::sweep(st, d, ws, cfg, rng);
    if (it >= cfg.n_burn) {
      const int r = it - cfg.n_burn;
      out.beta.row(r) = st.beta().transpose();
      for (int j = 0; j < p; ++j) out.extras(r, j) = st.b[j];
      for (int j = 0; j < p; ++j) out.extras(r, p + j) = st.tau[j];
      out.extras(r, 2 * p) = st.sigma2;
      out.extras(r, 2 * p + 1) = st.pi0;
      out.extras(r, 2 * p + 2) = st.pi1;
      out.extras(r, 2 * p + 3) = st.s2;
    }
  }
  return out;
}

}  // namespace grpss
