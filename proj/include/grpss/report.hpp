#pragma once

// JSON report assembly. Everything outside the "metadata" object is a pure
// function of inputs and seed, so reports diff cleanly across runs.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "grpss/chain.hpp"
#include "grpss/simulate.hpp"

namespace grpss {

inline constexpr const char* kVersion = "0.1.0";

using ordered_json = nlohmann::ordered_json;

namespace report_detail {

inline ordered_json opt_num(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

inline ordered_json vec(const VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline ordered_json flags(const std::vector<char>& f) {
  ordered_json a = ordered_json::array();
  for (char c : f) a.push_back(c ? 1 : 0);
  return a;
}

}  // namespace report_detail

inline ordered_json config_json(const SamplerConfig& cfg) {
  ordered_json j;
  j["n_iter"] = cfg.n_iter;
  j["n_burn"] = cfg.n_burn;
  j["seed"] = cfg.seed;
  j["stream"] = cfg.stream;
  j["beta_a"] = cfg.beta_a;
  j["beta_b"] = cfg.beta_b;
  j["beta_c1"] = cfg.beta_c1;
  j["beta_c2"] = cfg.beta_c2;
  j["fixed_pi0"] = report_detail::opt_num(cfg.fixed_pi0);
  j["fixed_pi1"] = report_detail::opt_num(cfg.fixed_pi1);
  j["sigma_prior_shape"] = report_detail::opt_num(cfg.sigma_prior_shape);
  j["sigma_prior_rate"] = report_detail::opt_num(cfg.sigma_prior_rate);
  j["fixed_sigma2"] = report_detail::opt_num(cfg.fixed_sigma2);
  j["fixed_lambda"] = report_detail::opt_num(cfg.fixed_lambda);
  j["lambda_init"] = cfg.lambda_init;
  j["em_rounds"] = cfg.em_rounds;
  j["em_inner_iters"] = cfg.em_inner_iters;
  j["fixed_lambda1_sq"] = report_detail::opt_num(cfg.fixed_lambda1_sq);
  j["fixed_lambda2_sq"] = report_detail::opt_num(cfg.fixed_lambda2_sq);
  j["d1"] = cfg.d1;
  j["d2"] = cfg.d2;
  j["fixed_s2"] = report_detail::opt_num(cfg.fixed_s2);
  j["fixed_t"] = report_detail::opt_num(cfg.fixed_t);
  return j;
}

// Report for a sampler fit: point summaries, selection patterns, diagnostics.
inline ordered_json fit_report_json(const std::string& method, const SamplerConfig& cfg,
                                    const GroupedDesign& d, const PosteriorSummary& s,
                                    const ChainDraws& chain) {
  ordered_json j;
  j["version"] = kVersion;
  j["method"] = method;
  j["seed"] = cfg.seed;
  j["config"] = config_json(cfg);
  j["data"] = {{"n", d.n()}, {"p", d.p()}, {"groups", d.layout.sizes}};
  j["coefficients"] = {{"mean", report_detail::vec(s.coef_mean)},
                       {"median", report_detail::vec(s.coef_median)},
                       {"ci_lower", report_detail::vec(s.ci_lower)},
                       {"ci_upper", report_detail::vec(s.ci_upper)}};
  j["selection"] = {{"mtm_coef", report_detail::flags(s.mtm.coef_included)},
                    {"mtm_group", report_detail::flags(s.mtm.group_included)},
                    {"hppm_coef", report_detail::flags(s.hppm.coef_included)},
                    {"hppm_coef_freq", s.hppm_freq},
                    {"hppm_group", report_detail::flags(s.hppm_group.group_included)},
                    {"hppm_group_freq", s.hppm_group_freq},
                    {"group_spike_freq", report_detail::vec(s.spike_freq)}};
  ordered_json diag;
  diag["stored_draws"] = chain.stored();
  diag["lambda_used"] = chain.lambda_used;
  diag["lambda_trajectory"] = chain.lambda_trajectory;
  diag["variance_guard_hits"] = chain.guard_hits;
  j["diagnostics"] = diag;
  return j;
}

// Report for a penalized or least-squares fit.
inline ordered_json point_fit_report_json(const std::string& method, std::uint64_t seed,
                                          const GroupedDesign& d, const GroupedCoefficients& coef,
                                          const std::optional<CvResult>& cv) {
  ordered_json j;
  j["version"] = kVersion;
  j["method"] = method;
  j["seed"] = seed;
  j["data"] = {{"n", d.n()}, {"p", d.p()}, {"groups", d.layout.sizes}};
  j["coefficients"] = {{"estimate", report_detail::vec(coef.values)}};
  SelectionPattern sel = selection_of(coef);
  j["selection"] = {{"coef", report_detail::flags(sel.coef_included)},
                    {"group", report_detail::flags(sel.group_included)}};
  if (cv) {
    j["cv"] = {{"best_lambda1", cv->best.lambda1},
               {"best_lambda2", cv->best.lambda2},
               {"curve", cv->curve}};
  }
  return j;
}

inline ordered_json benchmark_report_json(const BenchmarkReport& r) {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = r.seed;
  j["n_reps"] = r.n_reps;
  j["rows"] = ordered_json::array();
  for (const MethodSummary& m : r.rows) {
    ordered_json row;
    row["example"] = m.example_id;
    row["method"] = m.method;
    row["n_reps"] = m.n_reps;
    row["n_failed"] = m.n_failed;
    row["tpr"] = report_detail::opt_num(m.tpr);
    row["fpr"] = report_detail::opt_num(m.fpr);
    row["group_tpr"] = report_detail::opt_num(m.group_tpr);
    row["group_fpr"] = report_detail::opt_num(m.group_fpr);
    row["hppm_tpr"] = report_detail::opt_num(m.hppm_tpr);
    row["hppm_fpr"] = report_detail::opt_num(m.hppm_fpr);
    row["hppm_group_tpr"] = report_detail::opt_num(m.hppm_group_tpr);
    row["hppm_group_fpr"] = report_detail::opt_num(m.hppm_group_fpr);
    row["mse_mean_median"] = report_detail::opt_num(m.mse_mean_median);
    row["mse_mean_se"] = report_detail::opt_num(m.mse_mean_se);
    row["mse_median_median"] = report_detail::opt_num(m.mse_median_median);
    row["mse_median_se"] = report_detail::opt_num(m.mse_median_se);
    j["rows"].push_back(std::move(row));
  }
  j["replications"] = ordered_json::array();
  for (const RepRecord& rec : r.replications) {
    ordered_json e;
    e["example"] = rec.example_id;
    e["method"] = rec.method;
    e["rep"] = rec.rep;
    e["ok"] = rec.result.ok;
    if (!rec.result.ok) {
      e["error"] = rec.result.error;
    } else {
      e["mse_mean"] = rec.result.mse_mean;
      e["mse_median"] = report_detail::opt_num(rec.result.mse_median);
      if (rec.result.median_select) {
        e["tpr"] = report_detail::opt_num(rec.result.median_select->coef.tpr);
        e["fpr"] = report_detail::opt_num(rec.result.median_select->coef.fpr);
      }
    }
    j["replications"].push_back(std::move(e));
  }
  return j;
}

inline ordered_json sensitivity_report_json(const SensitivityReport& r) {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = r.seed;
  j["n_reps"] = r.n_reps;
  j["rows"] = ordered_json::array();
  for (const SensitivityRow& row : r.rows)
    j["rows"].push_back(
        {{"setting", row.label}, {"mtm", row.mtm_misclass}, {"hppm", row.hppm_misclass}});
  j["gl"] = r.gl_misclass;
  return j;
}

namespace report_detail {

inline std::string csv_num(const std::optional<double>& v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", *v);
  return buf;
}

}  // namespace report_detail

// Flat table view of the benchmark rows; "--" marks undefined cells.
inline std::string benchmark_report_csv(const BenchmarkReport& r) {
  std::string out =
      "example,method,n_reps,n_failed,tpr,fpr,group_tpr,group_fpr,hppm_tpr,hppm_fpr,"
      "mse_mean_median,mse_mean_se,mse_median_median,mse_median_se\n";
  for (const MethodSummary& m : r.rows) {
    out += std::to_string(m.example_id) + "," + m.method + "," + std::to_string(m.n_reps) + "," +
           std::to_string(m.n_failed) + "," + report_detail::csv_num(m.tpr) + "," +
           report_detail::csv_num(m.fpr) + "," + report_detail::csv_num(m.group_tpr) + "," +
           report_detail::csv_num(m.group_fpr) + "," + report_detail::csv_num(m.hppm_tpr) + "," +
           report_detail::csv_num(m.hppm_fpr) + "," + report_detail::csv_num(m.mse_mean_median) +
           "," + report_detail::csv_num(m.mse_mean_se) + "," +
           report_detail::csv_num(m.mse_median_median) + "," +
           report_detail::csv_num(m.mse_median_se) + "\n";
  }
  return out;
}

inline std::string sensitivity_report_csv(const SensitivityReport& r) {
  std::string out = "setting,mtm,hppm\n";
  for (const SensitivityRow& row : r.rows)
    out += row.label + "," + report_detail::csv_num(row.mtm_misclass) + "," +
           report_detail::csv_num(row.hppm_misclass) + "\n";
  out += "gl," + report_detail::csv_num(r.gl_misclass) + ",--\n";
  return out;
}

}  // namespace grpss
