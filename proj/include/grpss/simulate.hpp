#pragma once

// Synthetic benchmark suite: five data generators, selection/prediction
// metrics, and a replication runner. Each replication derives its RNG streams
// from (example id, rep index, slot), so any single run can be reproduced in
// isolation.

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "grpss/bgl_ss.hpp"
#include "grpss/bsgl.hpp"
#include "grpss/bsgs_ss.hpp"
#include "grpss/freq.hpp"
#include "grpss/special.hpp"

namespace grpss {

struct ExampleSpec {
  int id = 0;
  int n_train = 0;
  int n_test = 0;
  std::vector<int> group_sizes;
  VectorXd beta;
  double sigma = 1.0;
};

inline ExampleSpec example_spec(int id) {
  ExampleSpec s;
  s.id = id;
  switch (id) {
    case 1: {
      s.n_train = 60;
      s.n_test = 40;
      s.group_sizes.assign(4, 5);
      s.beta = VectorXd::Zero(20);
      s.beta.segment(0, 5) << 0.3, -1.0, 0.0, 0.5, 0.01;
      s.beta.segment(10, 5).setConstant(0.8);
      s.sigma = 3.0;
      break;
    }
    case 2: {
      s.n_train = 40;
      s.n_test = 20;
      s.group_sizes.assign(16, 5);
      s.beta = VectorXd::Zero(80);
      s.beta.segment(0, 5) << 1, 2, 3, 4, 5;
      s.beta.segment(10, 5) << 0.1, 0.2, 0.3, 0.4, 0.5;
      s.sigma = 2.0;
      break;
    }
    case 3:
    case 4: {
      s.n_train = 60;
      s.n_test = 40;
      s.group_sizes.assign(4, 10);
      s.beta = VectorXd::Zero(40);
      if (id == 3) {
        s.beta.segment(10, 10).setConstant(2.0);
        s.beta.segment(30, 10).setConstant(2.0);
      } else {
        s.beta.segment(10, 5).setConstant(2.0);
        s.beta.segment(30, 5).setConstant(2.0);
      }
      s.sigma = 2.0;
      break;
    }
    case 5: {
      s.n_train = 100;
      s.n_test = 100;
      s.group_sizes.assign(10, 3);
      s.group_sizes.insert(s.group_sizes.end(), 10, 2);
      s.beta = VectorXd::Zero(50);
      s.beta.segment(6, 3) << 1.0, 1.0, 1.0;                    // cubic expansion of factor 3
      s.beta.segment(15, 3) << 2.0 / 3.0, -1.0, 1.0 / 3.0;      // factor 6
      s.beta.segment(30, 2) << 2.0, 1.0;                        // dummies of factor 11
      s.sigma = 2.0;
      break;
    }
    default:
      throw UnknownExample("example id must be 1..5, got " + std::to_string(id));
  }
  return s;
}

struct ExampleData {
  GroupedDesign train;
  GroupedDesign test;
  GroupedCoefficients beta;
  double sigma = 1.0;
};

namespace sim_detail {

// all pairwise correlations 1/2: x_j = (z0 + z_j) / sqrt(2)
inline MatrixXd equicorrelated_rows(int n, int p, RngStream& rng) {
  MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    const double z0 = rng.normal();
    for (int j = 0; j < p; ++j) X(i, j) = (z0 + rng.normal()) / kSqrt2;
  }
  return X;
}

// within-group correlation 1/2, groups independent: x_gj = z_g + z_gj
inline MatrixXd shared_factor_rows(int n, const GroupLayout& lay, RngStream& rng) {
  MatrixXd X(n, lay.p);
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < lay.groups(); ++g) {
      const double zg = rng.normal();
      for (int j = 0; j < lay.sizes[g]; ++j) X(i, lay.offsets[g] + j) = zg + rng.normal();
    }
  }
  return X;
}

// 20 latent factors (z_k + w)/sqrt(2); first 10 expanded to cubic polynomials,
// last 10 trichotomized and dummy-coded against the middle level.
inline MatrixXd factor_expansion_rows(int n, RngStream& rng) {
  const double c1 = norm_quantile(1.0 / 3.0);
  const double c2 = norm_quantile(2.0 / 3.0);
  MatrixXd X(n, 50);
  for (int i = 0; i < n; ++i) {
    const double w = rng.normal();
    for (int k = 0; k < 20; ++k) {
      const double f = (rng.normal() + w) / kSqrt2;
      if (k < 10) {
        X(i, 3 * k) = f;
        X(i, 3 * k + 1) = f * f;
        X(i, 3 * k + 2) = f * f * f;
      } else {
        const int level = f < c1 ? 0 : (f > c2 ? 1 : 2);
        X(i, 30 + 2 * (k - 10)) = (level == 0) ? 1.0 : 0.0;
        X(i, 30 + 2 * (k - 10) + 1) = (level == 1) ? 1.0 : 0.0;
      }
    }
  }
  return X;
}

}  // namespace sim_detail

inline ExampleData generate_example(int id, RngStream& rng) {
  const ExampleSpec spec = example_spec(id);
  const GroupLayout lay = make_layout(spec.group_sizes);
  const int n_all = spec.n_train + spec.n_test;

  MatrixXd X;
  switch (id) {
    case 1: X = sim_detail::equicorrelated_rows(n_all, lay.p, rng); break;
    case 2:
    case 3:
    case 4: X = sim_detail::shared_factor_rows(n_all, lay, rng); break;
    default: X = sim_detail::factor_expansion_rows(n_all, rng); break;
  }
  VectorXd y = X * spec.beta;
  for (int i = 0; i < n_all; ++i) y[i] += spec.sigma * rng.normal();

  ExampleData d{
      make_design(X.topRows(spec.n_train), y.head(spec.n_train), spec.group_sizes),
      make_design(X.bottomRows(spec.n_test), y.tail(spec.n_test), spec.group_sizes),
      make_coefficients(spec.beta, lay), spec.sigma};
  return d;
}

// Training-set column scaling (1/n variance) plus response centering; fits run
// on the standardized scale, predictions are mapped back.
struct Standardizer {
  VectorXd x_mean;
  VectorXd x_sd;
  double y_mean = 0.0;

  static Standardizer fit(const GroupedDesign& train) {
    Standardizer s;
    s.x_mean = train.X.colwise().mean();
    MatrixXd C = train.X.rowwise() - s.x_mean.transpose();
    s.x_sd = (C.array().square().colwise().sum() / train.n()).sqrt();
    for (int j = 0; j < s.x_sd.size(); ++j)
      if (s.x_sd[j] < 1e-12) s.x_sd[j] = 1.0;
    s.y_mean = train.y.mean();
    return s;
  }

  MatrixXd transform_x(const MatrixXd& X) const {
    return (X.rowwise() - x_mean.transpose()).array().rowwise() / x_sd.transpose().array();
  }

  GroupedDesign transform(const GroupedDesign& d) const {
    return make_design(transform_x(d.X), d.y.array() - y_mean, d.layout.sizes);
  }

  // beta on the standardized scale -> predictions on the original scale
  VectorXd predict(const MatrixXd& X_raw, const VectorXd& beta_std) const {
    return (transform_x(X_raw) * beta_std).array() + y_mean;
  }

  VectorXd coefficients_original_scale(const VectorXd& beta_std) const {
    return beta_std.cwiseQuotient(x_sd);
  }
};

enum class Level { group, coefficient };

struct Rates {
  std::optional<double> tpr;  // empty when there are no true positives
  std::optional<double> fpr;  // empty when there are no true zeros
};

namespace sim_detail {

inline Rates rates_from_flags(const std::vector<char>& sel, const std::vector<char>& truth) {
  if (sel.size() != truth.size()) throw DimensionMismatch("selection/truth flag lengths differ");
  int tp = 0, pos = 0, fp = 0, neg = 0;
  for (size_t i = 0; i < sel.size(); ++i) {
    if (truth[i]) {
      ++pos;
      tp += sel[i] != 0;
    } else {
      ++neg;
      fp += sel[i] != 0;
    }
  }
  Rates r;
  if (pos > 0) r.tpr = static_cast<double>(tp) / pos;
  if (neg > 0) r.fpr = static_cast<double>(fp) / neg;
  return r;
}

}  // namespace sim_detail

inline Rates tpr_fpr(const SelectionPattern& sel, const SelectionPattern& truth, Level level) {
  if (level == Level::group)
    return sim_detail::rates_from_flags(sel.group_included, truth.group_included);
  return sim_detail::rates_from_flags(sel.coef_included, truth.coef_included);
}

struct SelectionRates {
  Rates coef;
  Rates group;
};

inline SelectionRates selection_rates(const SelectionPattern& sel, const SelectionPattern& truth) {
  return {tpr_fpr(sel, truth, Level::coefficient), tpr_fpr(sel, truth, Level::group)};
}

struct MedianSe {
  double median = 0.0;
  double se = 0.0;
};

namespace sim_detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace sim_detail

// Sample median with a bootstrap standard error.
inline MedianSe median_mse(const std::vector<double>& values, int boot_reps, RngStream& rng) {
  if (values.size() < 2) throw InsufficientReplications("median SE needs >= 2 replications");
  if (boot_reps < 100) throw InvalidParameter("boot_reps must be >= 100");
  MedianSe out;
  out.median = sim_detail::median_of(values);
  const int n = static_cast<int>(values.size());
  std::vector<double> meds(boot_reps);
  std::vector<double> sample(n);
  for (int b = 0; b < boot_reps; ++b) {
    for (int i = 0; i < n; ++i) sample[i] = values[static_cast<int>(rng.uniform() * n)];
    meds[b] = sim_detail::median_of(sample);
  }
  double m = 0.0;
  for (double v : meds) m += v;
  m /= boot_reps;
  double ss = 0.0;
  for (double v : meds) ss += (v - m) * (v - m);
  out.se = std::sqrt(ss / (boot_reps - 1));
  return out;
}

enum class Method { bgl_ss, bsgl, bsgs_ss, bgl, gl, sgl, ols };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::bgl_ss: return "bgl-ss";
    case Method::bsgl: return "bsgl";
    case Method::bsgs_ss: return "bsgs-ss";
    case Method::bgl: return "bgl";
    case Method::gl: return "gl";
    case Method::sgl: return "sgl";
    default: return "ols";
  }
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::bgl_ss, Method::bsgl, Method::bsgs_ss, Method::bgl, Method::gl,
                   Method::sgl, Method::ols})
    if (s == method_name(m)) return m;
  throw UnknownMethod("unknown method: " + s);
}

// One method on one replication. mse_mean uses the posterior mean (or the
// point estimate); mse_median and hppm_select exist for samplers only.
struct RepResult {
  bool ok = false;
  std::string error;
  double mse_mean = 0.0;
  std::optional<double> mse_median;
  std::optional<SelectionRates> median_select;  // support of the median / point estimate
  std::optional<SelectionRates> hppm_select;
};

struct MethodSummary {
  int example_id = 0;
  std::string method;
  int n_reps = 0;
  int n_failed = 0;
  std::optional<double> tpr, fpr;              // coefficient level, median/point support
  std::optional<double> group_tpr, group_fpr;
  std::optional<double> hppm_tpr, hppm_fpr;
  std::optional<double> hppm_group_tpr, hppm_group_fpr;
  std::optional<double> mse_mean_median, mse_mean_se;
  std::optional<double> mse_median_median, mse_median_se;
};

struct RepRecord {
  int example_id = 0;
  std::string method;
  int rep = 0;
  RepResult result;
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  int n_reps = 0;
  std::vector<MethodSummary> rows;
  std::vector<RepRecord> replications;
};

// Stream layout per (example, replication): slot 0 draws the data, slot 1+k
// drives method k. Injective over example <= 5, rep <= 990, slot <= 1008.
inline std::uint64_t stream_for(int example, int rep, int slot) {
  return static_cast<std::uint64_t>(example) * 1000003ULL +
         static_cast<std::uint64_t>(rep) * 1009ULL + static_cast<std::uint64_t>(slot);
}

namespace sim_detail {

inline void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, count);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) body(i);
    });
  for (auto& th : pool) th.join();
}

inline double mse_of(const VectorXd& yhat, const VectorXd& y) {
  return (yhat - y).squaredNorm() / y.size();
}

struct PreparedData {
  ExampleData data;
  Standardizer scaler;
  GroupedDesign train_std;
  SelectionPattern truth;
};

inline PreparedData prepare_replication(int example_id, std::uint64_t seed, int rep) {
  RngStream rng(seed, stream_for(example_id, rep, 0));
  ExampleData data = generate_example(example_id, rng);
  Standardizer scaler = Standardizer::fit(data.train);
  GroupedDesign train_std = scaler.transform(data.train);
  SelectionPattern truth = selection_of(data.beta);
  return {std::move(data), std::move(scaler), std::move(train_std), std::move(truth)};
}

inline RepResult evaluate_method(const PreparedData& pd, Method method, const SamplerConfig& base,
                                 std::uint64_t stream, int cv_folds) {
  RepResult res;
  try {
    const GroupedDesign& tr = pd.train_std;
    if (method == Method::gl || method == Method::sgl) {
      RngStream cv_rng(base.seed, stream);
      PenaltyPoint best;
      double best_err = std::numeric_limits<double>::infinity();
      if (method == Method::gl) {
        CvResult cv = cross_validate(tr, group_lasso_grid(tr), cv_folds, cv_rng);
        best = cv.best;
      } else {
        for (double alpha : {0.75, 0.5, 0.25}) {
          CvResult cv = cross_validate(tr, sparse_group_lasso_grid(tr, alpha), cv_folds, cv_rng);
          double err = *std::min_element(cv.curve.begin(), cv.curve.end());
          if (err < best_err) {
            best_err = err;
            best = cv.best;
          }
        }
      }
      GroupedCoefficients fit = fit_sparse_group_lasso(tr, best.lambda1, best.lambda2);
      res.mse_mean = mse_of(pd.scaler.predict(pd.data.test.X, fit.values), pd.data.test.y);
      res.median_select = selection_rates(selection_of(fit), pd.truth);
    } else if (method == Method::ols) {
      GroupedCoefficients fit = fit_ols(tr);
      res.mse_mean = mse_of(pd.scaler.predict(pd.data.test.X, fit.values), pd.data.test.y);
      res.median_select = selection_rates(selection_of(fit), pd.truth);
    } else {
      SamplerConfig cfg = base;
      cfg.stream = stream;
      if (method == Method::bgl) cfg.fixed_pi0 = 0.0;
      ChainDraws ch;
      if (method == Method::bsgl) {
        ch = run_bsgl(tr, cfg);
      } else if (method == Method::bsgs_ss) {
        ch = run_bsgs_ss(tr, cfg);
      } else {
        ch = run_bgl_ss(tr, cfg);
      }
      PosteriorSummary s = summarize(ch);
      res.mse_mean = mse_of(pd.scaler.predict(pd.data.test.X, s.coef_mean), pd.data.test.y);
      res.mse_median = mse_of(pd.scaler.predict(pd.data.test.X, s.coef_median), pd.data.test.y);
      res.median_select = selection_rates(s.mtm, pd.truth);
      SelectionRates hp;
      hp.coef = rates_from_flags(s.hppm.coef_included, pd.truth.coef_included);
      hp.group = rates_from_flags(s.hppm_group.group_included, pd.truth.group_included);
      res.hppm_select = hp;
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

inline std::optional<double> mean_defined(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  int k = 0;
  for (const auto& x : xs)
    if (x) {
      sum += *x;
      ++k;
    }
  if (k == 0) return std::nullopt;
  return sum / k;
}

}  // namespace sim_detail

struct BenchmarkRequest {
  std::vector<int> examples;
  std::vector<Method> methods;
  int n_reps = 50;
  SamplerConfig sampler;  // seed doubles as the master seed
  int cv_folds = 5;
  int jobs = 1;
};

inline BenchmarkReport run_benchmark(const BenchmarkRequest& req) {
  if (req.n_reps < 1) throw InvalidParameter("benchmark needs n_reps >= 1");
  if (req.examples.empty() || req.methods.empty())
    throw InvalidParameter("benchmark needs at least one example and one method");
  req.sampler.validate();

  BenchmarkReport report;
  report.seed = req.sampler.seed;
  report.n_reps = req.n_reps;

  for (int example_id : req.examples) {
    example_spec(example_id);  // reject bad ids before spawning work
    const int m_count = static_cast<int>(req.methods.size());
    std::vector<std::vector<RepResult>> results(req.n_reps, std::vector<RepResult>(m_count));

    sim_detail::parallel_for(req.n_reps, req.jobs, [&](int rep) {
      sim_detail::PreparedData pd =
          sim_detail::prepare_replication(example_id, req.sampler.seed, rep);
      for (int mi = 0; mi < m_count; ++mi)
        results[rep][mi] = sim_detail::evaluate_method(
            pd, req.methods[mi], req.sampler, stream_for(example_id, rep, 1 + mi), req.cv_folds);
    });

    for (int mi = 0; mi < m_count; ++mi) {
      MethodSummary row;
      row.example_id = example_id;
      row.method = method_name(req.methods[mi]);
      row.n_reps = req.n_reps;

      std::vector<std::optional<double>> tpr, fpr, gtpr, gfpr, htpr, hfpr, hgtpr, hgfpr;
      std::vector<double> mse_mean, mse_median;
      for (int rep = 0; rep < req.n_reps; ++rep) {
        const RepResult& r = results[rep][mi];
        report.replications.push_back({example_id, row.method, rep, r});
        if (!r.ok) {
          ++row.n_failed;
          continue;
        }
        mse_mean.push_back(r.mse_mean);
        if (r.mse_median) mse_median.push_back(*r.mse_median);
        if (r.median_select) {
          tpr.push_back(r.median_select->coef.tpr);
          fpr.push_back(r.median_select->coef.fpr);
          gtpr.push_back(r.median_select->group.tpr);
          gfpr.push_back(r.median_select->group.fpr);
        }
        if (r.hppm_select) {
          htpr.push_back(r.hppm_select->coef.tpr);
          hfpr.push_back(r.hppm_select->coef.fpr);
          hgtpr.push_back(r.hppm_select->group.tpr);
          hgfpr.push_back(r.hppm_select->group.fpr);
        }
      }
      row.tpr = sim_detail::mean_defined(tpr);
      row.fpr = sim_detail::mean_defined(fpr);
      row.group_tpr = sim_detail::mean_defined(gtpr);
      row.group_fpr = sim_detail::mean_defined(gfpr);
      row.hppm_tpr = sim_detail::mean_defined(htpr);
      row.hppm_fpr = sim_detail::mean_defined(hfpr);
      row.hppm_group_tpr = sim_detail::mean_defined(hgtpr);
      row.hppm_group_fpr = sim_detail::mean_defined(hgfpr);

      RngStream boot_rng(req.sampler.seed, stream_for(example_id, 991, 1 + mi));
      if (mse_mean.size() >= 2) {
        MedianSe ms = median_mse(mse_mean, 1000, boot_rng);
        row.mse_mean_median = ms.median;
        row.mse_mean_se = ms.se;
      } else if (mse_mean.size() == 1) {
        row.mse_mean_median = mse_mean[0];
      }
      if (mse_median.size() >= 2) {
        MedianSe ms = median_mse(mse_median, 1000, boot_rng);
        row.mse_median_median = ms.median;
        row.mse_median_se = ms.se;
      } else if (mse_median.size() == 1) {
        row.mse_median_median = mse_median[0];
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// Prior settings swept in the robustness table: pi0 pinned or Beta(a,a).
struct SensitivitySetting {
  std::optional<double> fixed_pi0;
  double beta_a = 1.0;
  std::string label;
};

inline std::vector<SensitivitySetting> default_sensitivity_settings() {
  std::vector<SensitivitySetting> v;
  for (double p : {0.2, 0.5, 0.8}) v.push_back({p, 1.0, "pi0=" + std::to_string(p).substr(0, 3)});
  for (double a : {0.5, 1.0, 1.5})
    v.push_back({std::nullopt, a, "beta(" + std::to_string(a).substr(0, 3) + ")"});
  return v;
}

struct SensitivityRow {
  std::string label;
  double mtm_misclass = 0.0;
  double hppm_misclass = 0.0;
};

struct SensitivityReport {
  std::uint64_t seed = 0;
  int n_reps = 0;
  std::vector<SensitivityRow> rows;
  double gl_misclass = 0.0;
};

namespace sim_detail {

inline double misclass_fraction(const std::vector<char>& sel, const std::vector<char>& truth) {
  int wrong = 0;
  for (size_t i = 0; i < sel.size(); ++i) wrong += (sel[i] != 0) != (truth[i] != 0);
  return static_cast<double>(wrong) / sel.size();
}

}  // namespace sim_detail

// Fraction of coefficients misclassified on fresh draws of the first example,
// per prior setting; group-lasso CV row included as the reference.
inline SensitivityReport run_sensitivity(const SamplerConfig& base, int n_reps,
                                         const std::vector<SensitivitySetting>& settings =
                                             default_sensitivity_settings(),
                                         int jobs = 1, int cv_folds = 5) {
  if (n_reps < 1) throw InvalidParameter("sensitivity needs n_reps >= 1");
  if (settings.empty()) throw InvalidParameter("sensitivity needs at least one setting");
  base.validate();

  const int ns = static_cast<int>(settings.size());
  std::vector<std::vector<double>> mtm(n_reps, std::vector<double>(ns, 0.0));
  std::vector<std::vector<double>> hppm(n_reps, std::vector<double>(ns, 0.0));
  std::vector<double> gl(n_reps, 0.0);

  sim_detail::parallel_for(n_reps, jobs, [&](int rep) {
    sim_detail::PreparedData pd = sim_detail::prepare_replication(1, base.seed, rep);

    RngStream cv_rng(base.seed, stream_for(1, rep, 1));
    CvResult cv = cross_validate(pd.train_std, group_lasso_grid(pd.train_std), cv_folds, cv_rng);
    GroupedCoefficients fit = fit_group_lasso(pd.train_std, cv.best.lambda2);
    gl[rep] = sim_detail::misclass_fraction(selection_of(fit).coef_included,
                                            pd.truth.coef_included);

    for (int k = 0; k < ns; ++k) {
      SamplerConfig cfg = base;
      cfg.stream = stream_for(1, rep, 2 + k);
      cfg.fixed_pi0 = settings[k].fixed_pi0;
      cfg.beta_a = cfg.beta_b = settings[k].beta_a;
      PosteriorSummary s = summarize(run_bgl_ss(pd.train_std, cfg));
      mtm[rep][k] = sim_detail::misclass_fraction(s.mtm.coef_included, pd.truth.coef_included);
      hppm[rep][k] = sim_detail::misclass_fraction(s.hppm.coef_included, pd.truth.coef_included);
    }
  });

  SensitivityReport rep_out;
  rep_out.seed = base.seed;
  rep_out.n_reps = n_reps;
  for (int k = 0; k < ns; ++k) {
    SensitivityRow row;
    row.label = settings[k].label;
    for (int r = 0; r < n_reps; ++r) {
      row.mtm_misclass += mtm[r][k];
      row.hppm_misclass += hppm[r][k];
    }
    row.mtm_misclass /= n_reps;
    row.hppm_misclass /= n_reps;
    rep_out.rows.push_back(std::move(row));
  }
  for (int r = 0; r < n_reps; ++r) rep_out.gl_misclass += gl[r];
  rep_out.gl_misclass /= n_reps;
  return rep_out;
}

}  // namespace grpss
