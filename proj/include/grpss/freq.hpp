#pragma once

// Penalized least-squares baselines. Objectives use the unhalved loss:
//   group lasso   : ||y - X b||^2 + lambda * sum_g ||b_g||_2
//   sparse variant: ||y - X b||^2 + lambda1 ||b||_1 + lambda2 * sum_g ||b_g||_2
// Block updates are majorized prox steps with L_g = 2 * lmax(Xg' Xg); a block
// is set to exactly zero whenever the subgradient condition at zero holds for
// the residual that excludes it.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "grpss/model.hpp"
#include "grpss/random.hpp"

namespace grpss {

struct FitOptions {
  double tol_change = 1e-8;  // max block update between sweeps
  double tol_kkt = 1e-6;
  int max_sweeps = 100000;
};

inline VectorXd soft_threshold(const VectorXd& z, double t) {
  return z.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

// Max subgradient violation; lambda1 = 0 gives the group lasso condition.
inline double kkt_residual(const GroupedDesign& d, const VectorXd& beta, double lambda1,
                           double lambda2) {
  if (beta.size() != d.p()) throw DimensionMismatch("kkt_residual: beta length != p");
  VectorXd r = d.y - d.X * beta;
  double worst = 0.0;
  for (int g = 0; g < d.G(); ++g) {
    const int off = d.layout.offsets[g];
    const int m = d.layout.sizes[g];
    auto bg = beta.segment(off, m);
    VectorXd grad = -2.0 * (d.Xg(g).transpose() * r);
    if (bg.isZero(0.0)) {
      double v = soft_threshold(-grad, lambda1).norm() - lambda2;
      worst = std::max(worst, std::max(v, 0.0));
    } else {
      const double nrm = bg.norm();
      for (int j = 0; j < m; ++j) {
        double v;
        if (bg[j] != 0.0) {
          v = std::abs(grad[j] + lambda1 * (bg[j] > 0 ? 1.0 : -1.0) + lambda2 * bg[j] / nrm);
        } else {
          v = std::max(std::abs(grad[j]) - lambda1, 0.0);
        }
        worst = std::max(worst, v);
      }
    }
  }
  return worst;
}

namespace freq_detail {

struct BlockData {
  std::vector<MatrixXd> XtX;
  std::vector<double> lip;  // 2 * lmax(Xg' Xg)

  static BlockData make(const GroupedDesign& d) {
    BlockData bd;
    for (int g = 0; g < d.G(); ++g) {
      auto Xg = d.Xg(g);
      bd.XtX.push_back(Xg.transpose() * Xg);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(bd.XtX.back());
      bd.lip.push_back(2.0 * es.eigenvalues().maxCoeff());
    }
    return bd;
  }
};

// One majorized pass over all blocks; returns max coefficient change.
inline double sweep(const GroupedDesign& d, const BlockData& bd, double lambda1, double lambda2,
                    VectorXd& beta, VectorXd& r) {
  double max_change = 0.0;
  for (int g = 0; g < d.G(); ++g) {
    const int off = d.layout.offsets[g];
    const int m = d.layout.sizes[g];
    VectorXd old = beta.segment(off, m);
    VectorXd XgTr = d.Xg(g).transpose() * r;
    VectorXd XgTr_excl = XgTr + bd.XtX[g] * old;

    VectorXd next;
    if (soft_threshold(2.0 * XgTr_excl, lambda1).norm() <= lambda2) {
      next = VectorXd::Zero(m);
    } else if (bd.lip[g] <= 0.0) {
      next = VectorXd::Zero(m);
    } else {
      const double L = bd.lip[g];
      VectorXd z = soft_threshold(old + (2.0 / L) * XgTr, lambda1 / L);
      const double nrm = z.norm();
      const double scale = nrm > 0.0 ? std::max(1.0 - lambda2 / (L * nrm), 0.0) : 0.0;
      next = scale * z;
    }
    if (next != old) {
      r.noalias() += d.Xg(g) * (old - next);
      max_change = std::max(max_change, (next - old).cwiseAbs().maxCoeff());
      beta.segment(off, m) = next;
    }
  }
  return max_change;
}

inline VectorXd run_fit(const GroupedDesign& d, double lambda1, double lambda2,
                        const FitOptions& opt, const VectorXd* warm) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw InvalidParameter("penalties must be >= 0");
  BlockData bd = BlockData::make(d);
  VectorXd beta = warm ? *warm : VectorXd::Zero(d.p());
  if (beta.size() != d.p()) throw DimensionMismatch("warm start length != p");
  VectorXd r = d.y - d.X * beta;
  for (int s = 0; s < opt.max_sweeps; ++s) {
    double change = sweep(d, bd, lambda1, lambda2, beta, r);
    if (change < opt.tol_change && kkt_residual(d, beta, lambda1, lambda2) <= opt.tol_kkt)
      return beta;
  }
  throw MaxIterationsExceeded("penalized fit: sweep cap reached");
}

}  // namespace freq_detail

inline GroupedCoefficients fit_group_lasso(const GroupedDesign& d, double lambda,
                                           const FitOptions& opt = {},
                                           const VectorXd* warm = nullptr) {
  return make_coefficients(freq_detail::run_fit(d, 0.0, lambda, opt, warm), d.layout);
}

inline GroupedCoefficients fit_sparse_group_lasso(const GroupedDesign& d, double lambda1,
                                                  double lambda2, const FitOptions& opt = {},
                                                  const VectorXd* warm = nullptr) {
  return make_coefficients(freq_detail::run_fit(d, lambda1, lambda2, opt, warm), d.layout);
}

inline GroupedCoefficients fit_ols(const GroupedDesign& d) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(d.X);
  if (qr.rank() < d.p()) throw RankDeficient("least squares: X has column rank < p");
  return make_coefficients(qr.solve(d.y), d.layout);
}

struct PenaltyPoint {
  double lambda1 = 0.0;  // coordinate penalty, 0 for plain group lasso
  double lambda2 = 0.0;  // group penalty
  double total() const { return lambda1 + lambda2; }
};

struct PenaltyGrid {
  std::vector<PenaltyPoint> points;  // descending by total penalty

  void validate() const {
    if (points.empty()) throw InvalidParameter("penalty grid is empty");
    for (size_t i = 0; i < points.size(); ++i) {
      if (!(points[i].total() > 0.0) || points[i].lambda1 < 0.0 || points[i].lambda2 < 0.0)
        throw InvalidParameter("penalty grid entries must be positive");
      if (i > 0 && points[i].total() >= points[i - 1].total())
        throw InvalidParameter("penalty grid must be strictly descending");
    }
  }
};

namespace freq_detail {

inline std::vector<double> log_spaced(double top, int n_points) {
  std::vector<double> v{top};  // exact, so the zeroing anchor survives rounding
  const double lo = std::log(1e-3 * top), hi = std::log(top);
  for (int i = 1; i < n_points; ++i)
    v.push_back(std::exp(hi + (lo - hi) * i / std::max(n_points - 1, 1)));
  return v;
}

}  // namespace freq_detail

// Smallest lambda with an all-zero solution, then 50 log-spaced points down.
inline PenaltyGrid group_lasso_grid(const GroupedDesign& d, int n_points = 50) {
  double lmax = 0.0;
  for (int g = 0; g < d.G(); ++g) lmax = std::max(lmax, 2.0 * (d.Xg(g).transpose() * d.y).norm());
  if (!(lmax > 0.0)) throw DegenerateEstimate("penalty grid: X'y is zero");
  PenaltyGrid grid;
  for (double v : freq_detail::log_spaced(lmax, n_points)) grid.points.push_back({0.0, v});
  grid.validate();
  return grid;
}

// Total penalty split as lambda1 = alpha * t, lambda2 = (1 - alpha) * t; the
// all-zero threshold in t is found by bisection on the group subgradient test.
inline PenaltyGrid sparse_group_lasso_grid(const GroupedDesign& d, double alpha,
                                           int n_points = 50) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw InvalidParameter("alpha must be in (0,1)");
  auto all_zero_at = [&](double t) {
    for (int g = 0; g < d.G(); ++g) {
      VectorXd u = 2.0 * (d.Xg(g).transpose() * d.y);
      if (soft_threshold(u, alpha * t).norm() > (1.0 - alpha) * t) return false;
    }
    return true;
  };
  double hi = 2.0 * (d.X.transpose() * d.y).cwiseAbs().maxCoeff() / std::min(alpha, 1.0 - alpha);
  if (!(hi > 0.0)) throw DegenerateEstimate("penalty grid: X'y is zero");
  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (all_zero_at(mid) ? hi : lo) = mid;
  }
  PenaltyGrid grid;
  for (double t : freq_detail::log_spaced(hi, n_points))
    grid.points.push_back({alpha * t, (1.0 - alpha) * t});
  grid.validate();
  return grid;
}

struct CvResult {
  PenaltyPoint best;
  std::vector<double> curve;  // mean held-out squared error per grid point
};

// K-fold CV over a descending grid with warm starts; ties go to the larger
// penalty because only strict improvements move the argmin.
inline CvResult cross_validate(const GroupedDesign& d, const PenaltyGrid& grid, int k,
                               RngStream& rng) {
  grid.validate();
  if (k < 2) throw InsufficientData("cross validation: need k >= 2");
  if (d.n() < k) throw InsufficientData("cross validation: need n >= k");

  std::vector<int> order(d.n());
  std::iota(order.begin(), order.end(), 0);
  for (int i = d.n() - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<int> fold_of(d.n());
  for (int i = 0; i < d.n(); ++i) fold_of[order[i]] = i % k;

  const int np = static_cast<int>(grid.points.size());
  std::vector<double> total_sq(np, 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<int> tr, te;
    for (int i = 0; i < d.n(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    MatrixXd Xtr(tr.size(), d.p()), Xte(te.size(), d.p());
    VectorXd ytr(tr.size()), yte(te.size());
    for (size_t i = 0; i < tr.size(); ++i) Xtr.row(i) = d.X.row(tr[i]), ytr[i] = d.y[tr[i]];
    for (size_t i = 0; i < te.size(); ++i) Xte.row(i) = d.X.row(te[i]), yte[i] = d.y[te[i]];
    GroupedDesign dtr = make_design(Xtr, ytr, d.layout.sizes);

    VectorXd warm = VectorXd::Zero(d.p());
    for (int i = 0; i < np; ++i) {
      warm = freq_detail::run_fit(dtr, grid.points[i].lambda1, grid.points[i].lambda2, {}, &warm);
      total_sq[i] += (yte - Xte * warm).squaredNorm();
    }
  }

  CvResult res;
  res.curve.resize(np);
  int best = 0;
  for (int i = 0; i < np; ++i) {
    res.curve[i] = total_sq[i] / d.n();
    if (res.curve[i] < res.curve[best]) best = i;
  }
  res.best = grid.points[best];
  return res;
}

}  // namespace grpss
