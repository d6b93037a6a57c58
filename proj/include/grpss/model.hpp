#pragma once

// Grouped regression containers shared by every sampler and solver.

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "grpss/errors.hpp"

namespace grpss {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Column partition of a design matrix into contiguous groups.
struct GroupLayout {
  std::vector<int> sizes;
  std::vector<int> offsets;  // offsets[g] = first column of group g
  int p = 0;

  int groups() const { return static_cast<int>(sizes.size()); }
};

inline GroupLayout make_layout(const std::vector<int>& sizes) {
  if (sizes.empty()) throw EmptyGroup("group list is empty");
  GroupLayout lay;
  lay.sizes = sizes;
  lay.offsets.resize(sizes.size());
  int off = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    if (sizes[g] <= 0) throw EmptyGroup("group " + std::to_string(g) + " has size " + std::to_string(sizes[g]));
    lay.offsets[g] = off;
    off += sizes[g];
  }
  lay.p = off;
  return lay;
}

struct GroupedDesign {
  MatrixXd X;
  VectorXd y;
  GroupLayout layout;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return layout.p; }
  int G() const { return layout.groups(); }

  auto Xg(int g) const { return X.middleCols(layout.offsets[g], layout.sizes[g]); }
};

inline GroupedDesign make_design(MatrixXd X, VectorXd y, const std::vector<int>& group_sizes) {
  GroupLayout lay = make_layout(group_sizes);
  if (lay.p != X.cols())
    throw DimensionMismatch("group sizes sum to " + std::to_string(lay.p) + " but X has " +
                              std::to_string(X.cols()) + " columns");
  if (X.rows() != y.size())
    throw DimensionMismatch("X has " + std::to_string(X.rows()) + " rows but y has " +
                              std::to_string(y.size()) + " entries");
  if (X.rows() == 0) throw InsufficientData("design has no rows");
  if (!X.allFinite() || !y.allFinite()) throw NonFiniteInput("design contains NaN or Inf entries");
  return GroupedDesign{std::move(X), std::move(y), std::move(lay)};
}

// Coefficient vector carrying its group layout.
struct GroupedCoefficients {
  VectorXd values;
  GroupLayout layout;

  auto group(int g) const { return values.segment(layout.offsets[g], layout.sizes[g]); }
  auto group(int g) { return values.segment(layout.offsets[g], layout.sizes[g]); }
  double group_norm(int g) const { return group(g).norm(); }
};

inline GroupedCoefficients make_coefficients(VectorXd values, const GroupLayout& layout) {
  if (values.size() != layout.p)
    throw DimensionMismatch("coefficient vector length " + std::to_string(values.size()) +
                              " does not match layout p=" + std::to_string(layout.p));
  return GroupedCoefficients{std::move(values), layout};
}

// Checked read-only slice of one coefficient group.
inline VectorXd group_view(const GroupedCoefficients& beta, int g) {
  if (g < 0 || g >= beta.layout.groups())
    throw IndexOutOfRange("group index " + std::to_string(g) + " out of range");
  return beta.group(g);
}

// Inclusion flags at both resolutions; group flag is always the OR of its
// coefficient flags.
struct SelectionPattern {
  std::vector<char> group_included;
  std::vector<char> coef_included;

  int selected_groups() const {
    int k = 0;
    for (char c : group_included) k += (c != 0);
    return k;
  }
  int selected_coefs() const {
    int k = 0;
    for (char c : coef_included) k += (c != 0);
    return k;
  }
  bool operator==(const SelectionPattern&) const = default;
};

inline SelectionPattern selection_of(const GroupedCoefficients& coef) {
  SelectionPattern pat;
  const auto& lay = coef.layout;
  pat.coef_included.resize(lay.p);
  pat.group_included.resize(lay.groups());
  for (int g = 0; g < lay.groups(); ++g) {
    bool any = false;
    for (int j = 0; j < lay.sizes[g]; ++j) {
      bool nz = coef.values[lay.offsets[g] + j] != 0.0;
      pat.coef_included[lay.offsets[g] + j] = nz;
      any = any || nz;
    }
    pat.group_included[g] = any;
  }
  return pat;
}

// Builds a pattern from explicit coefficient flags, deriving group flags.
inline SelectionPattern pattern_from_coef_flags(const std::vector<char>& coef_flags, const GroupLayout& lay) {
  if (static_cast<int>(coef_flags.size()) != lay.p)
    throw DimensionMismatch("flag vector does not match layout");
  SelectionPattern pat;
  pat.coef_included = coef_flags;
  pat.group_included.resize(lay.groups());
  for (int g = 0; g < lay.groups(); ++g) {
    bool any = false;
    for (int j = 0; j < lay.sizes[g]; ++j) any = any || coef_flags[lay.offsets[g] + j];
    pat.group_included[g] = any;
  }
  return pat;
}

// Shared sampler knobs. Fields that only one sampler reads are prefixed.
struct SamplerConfig {
  int n_iter = 10000;
  int n_burn = 5000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // spike weight prior Beta(a, b) on pi0 (and Beta(c1, c2) on pi1 for the
  // bi-level sampler); fixed_* pins a value and disables its update
  double beta_a = 1.0;
  double beta_b = 1.0;
  double beta_c1 = 1.0;
  double beta_c2 = 1.0;
  std::optional<double> fixed_pi0;
  std::optional<double> fixed_pi1;

  // sigma^2 ~ IG(shape, rate); 0,0 is the improper 1/sigma^2 prior
  std::optional<double> sigma_prior_shape;
  std::optional<double> sigma_prior_rate;
  std::optional<double> fixed_sigma2;

  // group-lasso penalty: fixed, or estimated by MC-EM when unset
  std::optional<double> fixed_lambda;
  double lambda_init = 1.0;
  int em_rounds = 20;
  int em_inner_iters = 1000;

  // per-group slab variances may be pinned (closed-form comparisons)
  std::optional<VectorXd> fixed_tau2;

  // sparse-group-lasso sampler penalties
  std::optional<double> fixed_lambda1_sq;
  std::optional<double> fixed_lambda2_sq;
  double d1 = 0.1;
  double d2 = 0.1;

  // bi-level sampler: tau slab scale s^2 ~ IG(1, t)
  std::optional<double> fixed_s2;
  std::optional<double> fixed_t;

  void validate() const {
    if (n_iter <= 0 || n_burn < 0 || n_burn >= n_iter)
      throw InvalidParameter("require 0 <= n_burn < n_iter");
    if (fixed_pi0 && (*fixed_pi0 < 0.0 || *fixed_pi0 > 1.0))
      throw InvalidParameter("fixed_pi0 outside [0,1]");
    if (fixed_pi1 && (*fixed_pi1 < 0.0 || *fixed_pi1 > 1.0))
      throw InvalidParameter("fixed_pi1 outside [0,1]");
    if (beta_a <= 0.0 || beta_b <= 0.0 || beta_c1 <= 0.0 || beta_c2 <= 0.0)
      throw InvalidParameter("Beta hyperparameters must be > 0");
    if (em_rounds < 0 || em_inner_iters <= 0)
      throw InvalidParameter("EM schedule must have em_rounds >= 0, em_inner_iters > 0");
    if (fixed_lambda && !(*fixed_lambda > 0.0)) throw InvalidParameter("fixed_lambda must be > 0");
    if (fixed_sigma2 && !(*fixed_sigma2 > 0.0)) throw InvalidParameter("fixed_sigma2 must be > 0");
  }
};

}  // namespace grpss
