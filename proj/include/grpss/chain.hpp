#pragma once

// Post-burn-in draw storage and posterior summaries common to all samplers.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "grpss/model.hpp"

namespace grpss {

// Hyperparameter path from the Monte Carlo EM phase.
struct EmResult {
  double lambda = 0.0;
  std::vector<double> trajectory;
};

struct ChainDraws {
  MatrixXd beta;  // one stored draw per row
  GroupLayout layout;
  int n_iter = 0;
  int n_burn = 0;

  // auxiliary chains (tau2, sigma2, pi0, ...), column names parallel to cols
  MatrixXd extras;
  std::vector<std::string> extra_names;

  double lambda_used = 0.0;               // penalty the final chain ran at
  std::vector<double> lambda_trajectory;  // MC-EM path, empty when fixed
  long guard_hits = 0;                    // degenerate-branch draws (bsgl)

  int stored() const { return static_cast<int>(beta.rows()); }

  Eigen::VectorXd extra(const std::string& name) const {
    for (std::size_t k = 0; k < extra_names.size(); ++k)
      if (extra_names[k] == name) return extras.col(static_cast<int>(k));
    throw InvalidParameter("no extra chain named " + name);
  }
};

struct PosteriorSummary {
  VectorXd coef_mean;
  VectorXd coef_median;
  VectorXd ci_lower;  // equal-tail 95%
  VectorXd ci_upper;
  GroupLayout layout;

  SelectionPattern mtm;  // median-thresholding: coef kept iff median != 0

  SelectionPattern hppm;  // most-visited coefficient inclusion pattern
  double hppm_freq = 0.0;
  SelectionPattern hppm_group;  // most-visited group inclusion pattern
  double hppm_group_freq = 0.0;

  VectorXd spike_freq;  // per-group fraction of draws with the group at zero
};

namespace detail {

inline double column_quantile(std::vector<double>& v, double q) {
  // linear interpolation between order statistics (R type 7)
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  double h = q * (static_cast<double>(v.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  double w = h - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

inline double column_median(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline PosteriorSummary summarize(const ChainDraws& draws) {
  const int stored = draws.stored();
  if (stored <= 0) throw EmptyChain("chain holds no stored draws");
  if (stored != draws.n_iter - draws.n_burn)
    throw DimensionMismatch("stored draw count does not equal n_iter - n_burn");
  const GroupLayout& lay = draws.layout;
  const int p = lay.p;
  const int G = lay.groups();

  PosteriorSummary s;
  s.layout = lay;
  s.coef_mean = draws.beta.colwise().mean();
  s.coef_median.resize(p);
  s.ci_lower.resize(p);
  s.ci_upper.resize(p);

  std::vector<double> col(stored);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < stored; ++i) col[i] = draws.beta(i, j);
    std::vector<double> tmp = col;
    s.coef_median[j] = detail::column_median(tmp);
    tmp = col;
    s.ci_lower[j] = detail::column_quantile(tmp, 0.025);
    tmp = col;
    s.ci_upper[j] = detail::column_quantile(tmp, 0.975);
  }

  std::vector<char> med_flags(p);
  for (int j = 0; j < p; ++j) med_flags[j] = s.coef_median[j] != 0.0;
  s.mtm = pattern_from_coef_flags(med_flags, lay);

  // visit counts for coefficient-level and group-level patterns
  std::map<std::string, int> coef_counts, group_counts;
  std::string ckey(p, '0'), gkey(G, '0');
  VectorXd zero_draws = VectorXd::Zero(G);
  for (int i = 0; i < stored; ++i) {
    for (int j = 0; j < p; ++j) ckey[j] = draws.beta(i, j) != 0.0 ? '1' : '0';
    for (int g = 0; g < G; ++g) {
      bool any = false;
      for (int j = 0; j < lay.sizes[g]; ++j) any = any || ckey[lay.offsets[g] + j] == '1';
      gkey[g] = any ? '1' : '0';
      if (!any) zero_draws[g] += 1.0;
    }
    ++coef_counts[ckey];
    ++group_counts[gkey];
  }
  s.spike_freq = zero_draws / static_cast<double>(stored);

  auto top = [](const std::map<std::string, int>& counts) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > best->second) best = it;  // ties keep the smaller key
    return best;
  };
  auto bc = top(coef_counts);
  std::vector<char> cf(p);
  for (int j = 0; j < p; ++j) cf[j] = bc->first[j] == '1';
  s.hppm = pattern_from_coef_flags(cf, lay);
  s.hppm_freq = static_cast<double>(bc->second) / stored;

  auto bg = top(group_counts);
  s.hppm_group.group_included.assign(bg->first.begin(), bg->first.end());
  for (auto& c : s.hppm_group.group_included) c = c == '1';
  s.hppm_group.coef_included.resize(p);
  for (int g = 0; g < G; ++g)
    for (int j = 0; j < lay.sizes[g]; ++j)
      s.hppm_group.coef_included[lay.offsets[g] + j] = s.hppm_group.group_included[g];
  s.hppm_group_freq = static_cast<double>(bg->second) / stored;

  return s;
}

}  // namespace grpss
