#pragma once

// Command-line front end. Exit codes: 0 success, 2 input/usage error, 3
// numerical failure. Progress goes to stderr; stdout carries only the report
// when no output path is given.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "grpss/csv.hpp"
#include "grpss/report.hpp"

namespace grpss {

inline constexpr std::uint64_t kDefaultCliSeed = 20240101;

struct RunConfig {
  std::string data_path;
  std::string groups_path;
  std::string method = "bgl-ss";
  std::string out_path;  // empty: JSON to stdout
  SamplerConfig sampler;
  std::vector<int> examples;
  std::vector<std::string> methods;
  int reps = 50;
  bool sensitivity = false;
  std::string level = "coef";
  int jobs = 1;
  int cv_folds = 5;
};

namespace cli_detail {

inline std::vector<int> load_group_sizes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open " + path);
  ordered_json j = ordered_json::parse(in);
  if (!j.is_array()) throw ParseError(1, 1, "group spec must be a JSON array of sizes");
  std::vector<int> sizes;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError(1, 1, "group sizes must be integers");
    sizes.push_back(v.get<int>());
  }
  return sizes;
}

inline void write_output(const std::string& path, const std::string& content) {
  const char* tail = (!content.empty() && content.back() == '\n') ? "" : "\n";
  if (path.empty()) {
    std::cout << content << tail;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write " + path);
  out << content << tail;
}

inline std::string csv_sibling(const std::string& json_path) {
  const std::string suffix = ".json";
  if (json_path.size() > suffix.size() &&
      json_path.compare(json_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return json_path.substr(0, json_path.size() - suffix.size()) + ".csv";
  return json_path + ".csv";
}

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace cli_detail

inline int cmd_fit(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  const Method method = parse_method(rc.method);
  GroupedDesign raw = load_csv(rc.data_path, cli_detail::load_group_sizes(rc.groups_path));
  Standardizer scaler = Standardizer::fit(raw);
  GroupedDesign d = scaler.transform(raw);

  ordered_json j;
  if (method == Method::gl || method == Method::sgl || method == Method::ols) {
    GroupedCoefficients fit = make_coefficients(VectorXd::Zero(d.p()), d.layout);
    std::optional<CvResult> cv;
    if (method == Method::ols) {
      fit = fit_ols(d);
    } else {
      RngStream rng(rc.sampler.seed, rc.sampler.stream);
      if (method == Method::gl) {
        cv = cross_validate(d, group_lasso_grid(d), rc.cv_folds, rng);
      } else {
        double best_err = std::numeric_limits<double>::infinity();
        for (double alpha : {0.75, 0.5, 0.25}) {
          CvResult c = cross_validate(d, sparse_group_lasso_grid(d, alpha), rc.cv_folds, rng);
          double err = *std::min_element(c.curve.begin(), c.curve.end());
          if (!cv || err < best_err) {
            best_err = err;
            cv = c;
          }
        }
      }
      fit = fit_sparse_group_lasso(d, cv->best.lambda1, cv->best.lambda2);
    }
    j = point_fit_report_json(rc.method, rc.sampler.seed, d, fit, cv);
    j["coefficients"]["estimate_original_scale"] =
        report_detail::vec(scaler.coefficients_original_scale(fit.values));
  } else {
    SamplerConfig cfg = rc.sampler;
    if (method == Method::bgl) cfg.fixed_pi0 = 0.0;
    ChainDraws ch;
    if (method == Method::bsgl) {
      ch = run_bsgl(d, cfg);
    } else if (method == Method::bsgs_ss) {
      ch = run_bsgs_ss(d, cfg);
    } else {
      ch = run_bgl_ss(d, cfg);
    }
    PosteriorSummary s = summarize(ch);
    j = fit_report_json(rc.method, cfg, d, s, ch);
    j["coefficients"]["mean_original_scale"] =
        report_detail::vec(scaler.coefficients_original_scale(s.coef_mean));
    j["coefficients"]["median_original_scale"] =
        report_detail::vec(scaler.coefficients_original_scale(s.coef_median));
  }
  j["scaling"] = {{"x_mean", report_detail::vec(scaler.x_mean)},
                  {"x_sd", report_detail::vec(scaler.x_sd)},
                  {"y_mean", scaler.y_mean}};
  j["metadata"] = {{"elapsed_seconds", cli_detail::elapsed_since(t0)}};
  cli_detail::write_output(rc.out_path, j.dump(2));
  return 0;
}

inline int cmd_benchmark(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  ordered_json j;
  std::string csv;
  if (rc.sensitivity) {
    std::cerr << "sensitivity sweep: " << rc.reps << " replications\n";
    SensitivityReport rep =
        run_sensitivity(rc.sampler, rc.reps, default_sensitivity_settings(), rc.jobs, rc.cv_folds);
    j = sensitivity_report_json(rep);
    csv = sensitivity_report_csv(rep);
  } else {
    BenchmarkRequest req;
    req.examples = rc.examples.empty() ? std::vector<int>{1, 2, 3, 4, 5} : rc.examples;
    if (rc.methods.empty()) {
      req.methods = {Method::bgl_ss, Method::bsgs_ss, Method::gl, Method::sgl};
    } else {
      for (const std::string& m : rc.methods) req.methods.push_back(parse_method(m));
    }
    req.n_reps = rc.reps;
    req.sampler = rc.sampler;
    req.cv_folds = rc.cv_folds;
    req.jobs = rc.jobs;
    std::cerr << "benchmark: " << req.examples.size() << " example(s), " << req.methods.size()
              << " method(s), " << req.n_reps << " replications\n";
    BenchmarkReport rep = run_benchmark(req);
    j = benchmark_report_json(rep);
    csv = benchmark_report_csv(rep);
  }
  j["metadata"] = {{"elapsed_seconds", cli_detail::elapsed_since(t0)}};
  cli_detail::write_output(rc.out_path, j.dump(2));
  if (!rc.out_path.empty())
    cli_detail::write_output(cli_detail::csv_sibling(rc.out_path), csv);
  return 0;
}

namespace cli_detail {

// Slots for flags that map onto optional config fields; applied after parse.
struct SamplerFlags {
  double fix_lambda = 0.0;
  double pi0 = 0.0;
  std::vector<double> pi0_beta;
  CLI::Option* fix_lambda_opt = nullptr;
  CLI::Option* pi0_opt = nullptr;

  void add_to(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--iters", rc.sampler.n_iter, "Gibbs iterations (default 10000)");
    cmd->add_option("--burn", rc.sampler.n_burn, "burn-in iterations (default 5000)");
    cmd->add_option("--seed", rc.sampler.seed, "RNG seed");
    cmd->add_option("--em-rounds", rc.sampler.em_rounds, "MC-EM rounds for the penalty (0 skips)");
    fix_lambda_opt = cmd->add_option("--fix-lambda", fix_lambda, "skip MC-EM, pin the penalty");
    pi0_opt = cmd->add_option("--pi0", pi0, "pin the spike weight instead of sampling it");
    cmd->add_option("--pi0-beta", pi0_beta, "Beta(a,b) prior on the spike weight")->expected(2);
    cmd->add_option("--jobs", rc.jobs, "max concurrent replications");
    cmd->add_option("--cv-folds", rc.cv_folds, "folds for penalty cross-validation");
  }

  void apply(RunConfig& rc) const {
    if (fix_lambda_opt->count() > 0) rc.sampler.fixed_lambda = fix_lambda;
    if (pi0_opt->count() > 0) rc.sampler.fixed_pi0 = pi0;
    if (pi0_beta.size() == 2) {
      rc.sampler.beta_a = pi0_beta[0];
      rc.sampler.beta_b = pi0_beta[1];
    }
  }
};

}  // namespace cli_detail

// argv-style entry point; args excludes the program name.
inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian and penalized group-sparse regression"};
  app.require_subcommand(1);
  RunConfig rc;
  rc.sampler.seed = kDefaultCliSeed;

  CLI::App* fit = app.add_subcommand("fit", "fit one model to a CSV data set");
  fit->add_option("--data", rc.data_path, "CSV with y in the first column")->required();
  fit->add_option("--groups", rc.groups_path, "JSON array of group sizes")->required();
  fit->add_option("--method", rc.method,
                  "bgl-ss | bsgl | bsgs-ss | bgl | gl | sgl | ols (default bgl-ss)");
  fit->add_option("--out", rc.out_path, "report path (default: stdout)");
  cli_detail::SamplerFlags fit_flags;
  fit_flags.add_to(fit, rc);

  CLI::App* bench = app.add_subcommand("benchmark", "replicate the simulation study");
  bench->add_option("--examples", rc.examples, "example ids, 1..5 (default all)");
  bench->add_option("--methods", rc.methods, "methods to run (default bgl-ss bsgs-ss gl sgl)");
  bench->add_option("--reps", rc.reps, "replications per example (default 50)");
  bench->add_flag("--sensitivity", rc.sensitivity, "run the prior-sensitivity sweep instead");
  bench->add_option("--level", rc.level, "selection metric level")
      ->check(CLI::IsMember({"group", "coef"}));
  bench->add_option("--out", rc.out_path, "JSON path; a CSV sibling is written too");
  cli_detail::SamplerFlags bench_flags;
  bench_flags.add_to(bench, rc);

  std::vector<const char*> argv;
  argv.push_back("grpss");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  (fit->parsed() ? fit_flags : bench_flags).apply(rc);

  try {
    return fit->parsed() ? cmd_fit(rc) : cmd_benchmark(rc);
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownMethod& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownExample& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientData& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const EmptyGroup& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteInput& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace grpss
