#include "transglasso/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "transglasso/pipeline.hpp"
#include "transglasso/simgen.hpp"

namespace transglasso::cli {

namespace {

using json = nlohmann::ordered_json;

std::optional<TuningGrid> parse_grid(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  TuningGrid grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      grid.values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": cannot parse '" + cell + "'");
    }
  }
  std::sort(grid.values.begin(), grid.values.end(), std::greater<>());
  grid.validate();
  return grid;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

// Non-finite values (excluded candidates) are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (const double x : v) a.push_back(number_or_null(x));
  return a;
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SelectionError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const NumericError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

PipelineConfig pipeline_config(const CliConfig& c) {
  PipelineConfig pc;
  pc.lambda_m_grid = parse_grid(c.lambda_m, "--lambda-m");
  pc.lambda_psi_grid = parse_grid(c.lambda_psi, "--lambda-psi");
  pc.folds = c.folds;
  pc.seed = c.seed;
  pc.center = c.center;
  pc.threads = std::max(1u, c.threads);
  return pc;
}

}  // namespace

int cmd_estimate(const CliConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    if (config.target.empty()) throw ConfigError("estimate requires --target");
    const StudyData target = load_csv(config.target, config.has_header, 0);
    std::vector<StudyData> sources;
    for (std::size_t i = 0; i < config.sources.size(); ++i) {
      try {
        sources.push_back(load_csv(config.sources[i], config.has_header, static_cast<int>(i) + 1));
      } catch (const DimensionError& e) {
        throw DimensionError(config.sources[i].string() + ": " + e.what());
      }
    }
    const PipelineConfig pc = pipeline_config(config);
    TransGlassoEstimate est;
    if (config.select_informative) {
      est = trans_glasso_cv(target, sources, pc);
    } else {
      est = fit_trans_glasso(build_problem(target, sources, config.center), pc);
    }

    ensure_dir(config.out);
    write_matrix_csv(config.out / "omega0.csv", est.omega0);

    const auto& dg = est.diagnostics;
    json j;
    j["target"] = config.target.string();
    json src = json::array();
    for (const auto& s : config.sources) src.push_back(s.string());
    j["sources"] = src;
    j["d"] = target.d();
    j["center"] = config.center;
    j["seed"] = config.seed;
    j["lambda_m"] = est.lambda_m;
    j["lambda_psi"] = est.psi_lambdas;
    j["informative_set"] = est.informative_set;
    json diag;
    diag["target_only"] = dg.target_only;
    diag["admm_converged"] = dg.admm_converged;
    json conv = json::array();
    for (const char c : dg.dtrace_converged) conv.push_back(c != 0);
    diag["dtrace_converged"] = conv;
    diag["psi_support"] = dg.psi_support;
    diag["lambda_m_grid"] = numbers(dg.lambda_m_grid);
    diag["lambda_m_bic"] = numbers(dg.lambda_m_bic);
    json psi_bic = json::array();
    for (const auto& t : dg.psi_bic) psi_bic.push_back(numbers(t));
    diag["lambda_psi_bic"] = psi_bic;
    if (config.select_informative) {
      diag["ranks"] = dg.ranks;
      diag["cv_errors"] = numbers(dg.cv_errors);
      diag["k_chosen"] = dg.k_chosen;
      diag["folds"] = config.folds;
    }
    diag["warnings"] = dg.warnings;
    j["diagnostics"] = diag;
    write_text(config.out / "selection.json", j.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_simulate(const CliConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    if (config.n0 < 2 || config.n_source < 2) throw ConfigError("--n0 and --nsource must be >= 2");
    const ModelId model = parse_model(config.model);
    const GroundTruth truth = gen_model(model, config.d, config.num_sources, config.h, config.seed);
    ensure_dir(config.out);
    write_matrix_csv(config.out / "shared.csv", truth.shared);
    for (std::size_t k = 0; k < truth.precisions.size(); ++k) {
      const auto tag = std::to_string(k);
      write_matrix_csv(config.out / ("omega_" + tag + ".csv"), truth.precisions[k]);
      write_matrix_csv(config.out / ("gamma_" + tag + ".csv"), truth.uniques[k]);
      const Eigen::Index n = k == 0 ? config.n0 : config.n_source;
      const StudyData study =
          sample_gaussian(truth.precisions[k], n, derive_seed(config.seed, 1 + k), static_cast<int>(k));
      write_matrix_csv(config.out / ("study_" + tag + ".csv"), study.samples);
    }
    json j;
    j["model"] = to_string(model);
    j["d"] = config.d;
    j["K"] = config.num_sources;
    j["h"] = truth.h_per_study;
    j["n0"] = config.n0;
    j["n_source"] = config.n_source;
    j["seed"] = config.seed;
    j["sigma_offset"] = truth.sigma_offset;
    write_text(config.out / "truth.json", j.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_benchmark(const CliConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig ec;
    if (!config.preset.empty()) {
      ec = preset_config(config.preset);
    } else {
      ec.model = parse_model(config.model);
      ec.d = config.d;
      ec.num_sources = config.num_sources;
      ec.n0 = config.n0;
      ec.n_source = config.n_source;
      ec.h = config.h;
      if (config.select_informative) ec.estimators.insert(ec.estimators.begin(), Estimator::TransGlassoCv);
    }
    if (config.reps) ec.repetitions = *config.reps;
    ec.seed = config.seed;
    ec.threads = std::max(1u, config.threads);
    ec.pipeline = pipeline_config(config);
    ec.pipeline.center = false;

    const ExperimentReport report = run_experiment(ec);
    ensure_dir(config.out);
    write_text(config.out / "report.csv", report.to_csv());
    write_text(config.out / "summary.json", report.summary_json());
    const bool all_failed = std::all_of(report.summary.begin(), report.summary.end(),
                                        [](const EstimatorSummary& s) { return s.count == 0; });
    if (all_failed) {
      err << "solver failure: every repetition failed for every estimator\n";
      return kExitSolver;
    }
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer-learning estimation of sparse precision matrices"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  CliConfig c;
  std::string h_text = "10";
  int reps = 0;

  auto* estimate = app.add_subcommand("estimate", "Estimate the target precision matrix from CSV studies");
  auto* simulate = app.add_subcommand("simulate", "Write simulated ground truth and sampled studies");
  auto* benchmark = app.add_subcommand("benchmark", "Run a simulation experiment and report errors");

  for (auto* sub : {estimate, simulate, benchmark}) {
    sub->add_option("--out", c.out, "Output directory")->default_val(".");
    sub->add_option("--seed", c.seed, "Random seed")->envname("TRANSGLASSO_SEED");
    sub->add_option("--threads", c.threads, "Worker thread cap")->default_val(1);
  }
  for (auto* sub : {estimate, benchmark}) {
    sub->add_option("--folds", c.folds, "Cross-validation folds")->default_val(5);
    sub->add_option("--select-informative", c.select_informative,
                    "Choose the informative set by cross-validation");
    sub->add_option("--lambda-m", c.lambda_m, "auto or comma-separated lambda_M grid");
    sub->add_option("--lambda-psi", c.lambda_psi, "auto or comma-separated lambda_Psi grid");
  }
  for (auto* sub : {simulate, benchmark}) {
    sub->add_option("--model", c.model, "I, II or III");
    sub->add_option("--d", c.d, "Dimension");
    sub->add_option("--K", c.num_sources, "Number of sources");
    sub->add_option("--h", h_text, "Unique-component sparsity: scalar or K+1 comma-separated values");
    sub->add_option("--n0", c.n0, "Target sample size");
    sub->add_option("--nsource", c.n_source, "Sample size per source");
  }
  estimate->add_option("--target", c.target, "Target study CSV")->required();
  estimate->add_option("--sources", c.sources, "Source study CSVs (repeatable)");
  estimate->add_option("--center", c.center, "Center columns before computing covariances");
  estimate->add_flag("--header", c.has_header, "CSV files start with a header row");
  benchmark->add_option("--reps", reps, "Repetitions (overrides the preset)");
  benchmark->add_option("--preset", c.preset, "Named experiment design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  c.h.clear();
  {
    std::stringstream ss(h_text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        c.h.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        err << "error: --h: cannot parse '" << cell << "'\n";
        return kExitInput;
      }
    }
  }
  if (reps > 0) c.reps = reps;

  if (estimate->parsed()) return cmd_estimate(c, err);
  if (simulate->parsed()) return cmd_simulate(c, err);
  return cmd_benchmark(c, err);
}

}  // namespace transglasso::cli
