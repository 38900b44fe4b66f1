#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transglasso/common.hpp"
#include "transglasso/pipeline.hpp"
#include "transglasso/study_data.hpp"

namespace transglasso {

// Random numbers come from std::mt19937_64 (fully specified by the C++
// standard) fed through Boost.Random distributions, whose algorithms do not
// vary between standard libraries. Reports are reproducible across machines.

enum class ModelId { I, II, III };

std::string to_string(ModelId id);
/// Accepts "I", "II", "III" (also "1", "2", "3"); throws ConfigError otherwise.
ModelId parse_model(const std::string& text);

/// Simulated precisions Omega_k = shared + Gamma_k + sigma I.
struct GroundTruth {
  Matrix shared;                  // Omega-tilde
  std::vector<Matrix> uniques;    // Gamma_0..Gamma_K
  std::vector<Matrix> precisions;  // Omega_0..Omega_K
  double sigma_offset = 0.0;
  ModelId model_id = ModelId::I;
  std::vector<int> h_per_study;
  std::uint64_t seed = 0;

  std::size_t num_sources() const { return precisions.size() - 1; }
  /// Psi_k = Omega_k - Omega_0.
  Matrix differential(std::size_t k) const { return precisions[k] - precisions[0]; }
};

/// Generates Model I (band 1), II (band 5) or III (Erdos-Renyi) ground truth.
/// `h` holds one value for every study or exactly K+1 values.
/// Throws ConfigError when h needs more positions than are available.
GroundTruth gen_model(ModelId model, int d, int num_sources, std::span<const int> h,
                      std::uint64_t seed);

/// n draws from N(0, inv(omega)); throws NumericError when omega is not PD.
StudyData sample_gaussian(const Matrix& omega, Eigen::Index n, std::uint64_t seed,
                          int study_id = 0);

double frob_error(const Matrix& estimate, const Matrix& truth);

enum class Estimator { TransGlasso, TransGlassoCv, GlassoTarget, GlassoPooled };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& text);

struct ExperimentConfig {
  ModelId model = ModelId::I;
  std::string design = "custom";
  int d = 30;
  int num_sources = 3;
  Eigen::Index n0 = 100;
  Eigen::Index n_source = 300;
  std::vector<int> h{10};  // scalar or per-study (K+1 values)
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::vector<Estimator> estimators{Estimator::TransGlasso, Estimator::GlassoTarget,
                                    Estimator::GlassoPooled};
  PipelineConfig pipeline;
  unsigned threads = 1;

  void validate() const;
};

/// Reduced-scale and full-scale versions of the simulation designs.
/// Throws ConfigError for unknown names.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct ReportRow {
  std::string model;
  std::string design;
  int rep = 0;
  std::string estimator;
  std::optional<double> frob_error;  // empty when the estimator failed
};

struct EstimatorSummary {
  std::string estimator;
  std::size_t count = 0;    // successful repetitions
  std::size_t missing = 0;  // failed repetitions
  double mean = 0.0;
  std::optional<double> stderr_;  // s / sqrt(R); empty when R < 2
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<EstimatorSummary> summary;

  /// model,design,rep,estimator,frob_error (empty cell for failures).
  std::string to_csv() const;
  /// {"model":..,"design":..,"estimators":{name:{mean,stderr,count,missing}}}
  std::string summary_json() const;
};

/// Per-repetition sub-seeds come from (seed, rep), so the report does not
/// depend on `threads`.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Summary statistics over recorded rows, one entry per estimator in order.
std::vector<EstimatorSummary> summarize(std::span<const ReportRow> rows,
                                        std::span<const Estimator> estimators);

}  // namespace transglasso
