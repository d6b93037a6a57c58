#pragma once

// Continuous sparse-group-lasso Gibbs sampler over (beta, gamma2, tau2,
// sigma2, lambda1^2, lambda2^2). No spikes: every draw is fully dense.
// Sweep order: beta, gamma2, tau2, sigma2, lambdas.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "grpss/chain.hpp"
#include "grpss/model.hpp"
#include "grpss/random.hpp"

namespace grpss {

struct BsglState {
  VectorXd beta;    // p
  VectorXd tau2;    // p, per-coefficient scale
  VectorXd gamma2;  // G, per-group scale
  double sigma2 = 1.0;
  double lambda1_sq = 1.0;
  double lambda2_sq = 1.0;

  // V diagonal: harmonic combination of the two scales
  VectorXd v_diag(const GroupLayout& lay) const {
    VectorXd v(lay.p);
    for (int g = 0; g < lay.groups(); ++g)
      for (int j = 0; j < lay.sizes[g]; ++j) {
        int idx = lay.offsets[g] + j;
        v[idx] = 1.0 / (1.0 / tau2[idx] + 1.0 / gamma2[g]);
      }
    return v;
  }
};

namespace bsgl {

constexpr double kGuard = 1e-12;  // |beta| below this uses the degenerate branch

struct Workspace {
  MatrixXd XtX;
  VectorXd Xty;
  long guard_hits = 0;

  static Workspace make(const GroupedDesign& d) {
    return Workspace{d.X.transpose() * d.X, d.X.transpose() * d.y, 0};
  }
};

inline void step_beta_full(BsglState& st, const GroupedDesign& d, const Workspace& ws, RngStream& rng) {
  MatrixXd A = ws.XtX;
  VectorXd v = st.v_diag(d.layout);
  for (int j = 0; j < d.p(); ++j) {
    if (!(v[j] > 0.0) || !std::isfinite(v[j])) throw InvalidParameter("V diagonal must be positive finite");
    A(j, j) += 1.0 / v[j];
  }
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("beta conditional: Cholesky failed");
  VectorXd mean = llt.solve(ws.Xty);
  VectorXd xi(d.p());
  for (int j = 0; j < d.p(); ++j) xi[j] = rng.normal();
  // covariance sigma2 * A^{-1}
  st.beta = mean + std::sqrt(st.sigma2) * llt.matrixU().solve(xi);
}

inline void step_gamma2(BsglState& st, const GroupedDesign& d, Workspace& ws, RngStream& rng) {
  const double lam2sq = st.lambda2_sq;
  const double sigma = std::sqrt(st.sigma2);
  for (int g = 0; g < d.G(); ++g) {
    double norm = st.beta.segment(d.layout.offsets[g], d.layout.sizes[g]).norm();
    if (norm < kGuard) {
      // beta -> 0 limit of the GIG conditional
      st.gamma2[g] = rng.gamma(0.5, 0.5 * lam2sq);
      ++ws.guard_hits;
    } else {
      double mean = std::min(sigma * std::sqrt(lam2sq) / norm, 1e12);
      st.gamma2[g] = 1.0 / rng.inv_gaussian(mean, lam2sq);
    }
  }
}

inline void step_tau2(BsglState& st, const GroupedDesign& d, Workspace& ws, RngStream& rng) {
  const double lam1sq = st.lambda1_sq;
  const double sigma = std::sqrt(st.sigma2);
  for (int j = 0; j < d.p(); ++j) {
    double mag = std::abs(st.beta[j]);
    if (mag < kGuard) {
      st.tau2[j] = rng.gamma(0.5, 0.5 * lam1sq);
      ++ws.guard_hits;
    } else {
      double mean = std::min(sigma * std::sqrt(lam1sq) / mag, 1e12);
      st.tau2[j] = 1.0 / rng.inv_gaussian(mean, lam1sq);
    }
  }
}

inline void step_sigma2(BsglState& st, const GroupedDesign& d, const SamplerConfig& cfg, RngStream& rng) {
  VectorXd v = st.v_diag(d.layout);
  double quad = 0.0;
  for (int j = 0; j < d.p(); ++j) quad += st.beta[j] * st.beta[j] / v[j];
  double shape = 0.5 * (d.p() + d.n()) + cfg.sigma_prior_shape.value_or(0.0);
  double rate = 0.5 * (d.y - d.X * st.beta).squaredNorm() + 0.5 * quad + cfg.sigma_prior_rate.value_or(0.0);
  st.sigma2 = rng.inv_gamma(shape, rate);
}

inline void step_lambdas(BsglState& st, const GroupedDesign& d, const SamplerConfig& cfg, RngStream& rng) {
  if (!(cfg.d1 > 0.0) || !(cfg.d2 > 0.0)) throw InvalidParameter("d1 and d2 must be > 0");
  if (!cfg.fixed_lambda1_sq) st.lambda1_sq = rng.gamma(d.p() + 1.0, 0.5 * st.tau2.sum() + cfg.d1);
  if (!cfg.fixed_lambda2_sq) st.lambda2_sq = rng.gamma(0.5 * d.G() + 1.0, 0.5 * st.gamma2.sum() + cfg.d2);
}

inline void sweep(BsglState& st, const GroupedDesign& d, Workspace& ws, const SamplerConfig& cfg,
                  RngStream& rng) {
  step_beta_full(st, d, ws, rng);
  step_gamma2(st, d, ws, rng);
  step_tau2(st, d, ws, rng);
  if (!cfg.fixed_sigma2) step_sigma2(st, d, cfg, rng);
  step_lambdas(st, d, cfg, rng);
}

inline BsglState init_state(const GroupedDesign& d, const SamplerConfig& cfg) {
  BsglState st;
  MatrixXd A = d.X.transpose() * d.X;
  A.diagonal().array() += 1.0;
  st.beta = Eigen::LDLT<MatrixXd>(A).solve(d.X.transpose() * d.y);
  st.tau2 = VectorXd::Ones(d.p());
  st.gamma2 = VectorXd::Ones(d.G());
  double rss = (d.y - d.X * st.beta).squaredNorm();
  st.sigma2 = cfg.fixed_sigma2 ? *cfg.fixed_sigma2 : std::max(rss / d.n(), 1e-8);
  st.lambda1_sq = cfg.fixed_lambda1_sq.value_or(1.0);
  st.lambda2_sq = cfg.fixed_lambda2_sq.value_or(1.0);
  return st;
}

}  // namespace bsgl

inline ChainDraws run_bsgl(const GroupedDesign& d, const SamplerConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed, cfg.stream);
  BsglState st = bsgl::init_state(d, cfg);
  bsgl::Workspace ws = bsgl::Workspace::make(d);

  ChainDraws out;
  out.layout = d.layout;
  out.n_iter = cfg.n_iter;
  out.n_burn = cfg.n_burn;

  const int p = d.p();
  const int G = d.G();
  const int stored = cfg.n_iter - cfg.n_burn;
  out.beta.resize(stored, p);
  out.extras.resize(stored, p + G + 3);
  for (int j = 0; j < p; ++j) out.extra_names.push_back("tau2_" + std::to_string(j));
  for (int g = 0; g < G; ++g) out.extra_names.push_back("gamma2_" + std::to_string(g));
  out.extra_names.push_back("sigma2");
  out.extra_names.push_back("lambda1_sq");
  out.extra_names.push_back("lambda2_sq");

  for (int it = 0; it < cfg.n_iter; ++it) {
    bsgl::sweep(st, d, ws, cfg, rng);
    if (it >= cfg.n_burn) {
      const int r = it - cfg.n_burn;
      out.beta.row(r) = st.beta.transpose();
      for (int j = 0; j < p; ++j) out.extras(r, j) = st.tau2[j];
      for (int g = 0; g < G; ++g) out.extras(r, p + g) = st.gamma2[g];
      out.extras(r, p + G) = st.sigma2;
      out.extras(r, p + G + 1) = st.lambda1_sq;
      out.extras(r, p + G + 2) = st.lambda2_sq;
    }
  }
  out.guard_hits = ws.guard_hits;
  return out;
}

}  // namespace grpss
