#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "transglasso/admm_mtglasso.hpp"
#include "transglasso/baselines.hpp"
#include "transglasso/dtrace.hpp"
#include "transglasso/study_data.hpp"
#include "transglasso/tuning_grid.hpp"

namespace transglasso {

struct PipelineConfig {
  std::optional<TuningGrid> lambda_m_grid;    // auto when empty
  std::optional<TuningGrid> lambda_psi_grid;  // auto when empty
  AdmmConfig admm;
  DtraceConfig dtrace;
  double omega_zero_tol = 1e-8;
  double psi_zero_tol = 0.0;
  int folds = 5;
  std::uint64_t seed = 0;
  bool center = false;
  unsigned threads = 1;
};

/// Outcome of the D-Trace BIC sweep for one source.
struct PsiSelection {
  double lambda = 0.0;
  DiffNetwork psi;
  std::vector<double> grid;
  std::vector<double> bic_trace;
  std::vector<char> converged;
};

/// Outcome of the lambda_M sweep with fixed differential networks.
struct LambdaMSelection {
  double lambda_m = 0.0;
  Matrix omega0;
  MtGlassoSolution solution;
  std::vector<double> grid;
  std::vector<double> bic_trace;
  std::vector<char> converged;
};

struct PipelineDiagnostics {
  bool admm_converged = false;
  std::vector<char> dtrace_converged;
  std::vector<double> lambda_m_grid;
  std::vector<double> lambda_m_bic;
  std::vector<std::vector<double>> psi_bic;
  std::vector<std::size_t> psi_support;
  std::vector<int> ranks;          // R_1..R_K when informative-set selection ran
  std::vector<double> cv_errors;   // CV(K_chosen) for K_chosen = 0..K
  int k_chosen = -1;
  bool target_only = false;        // estimate came from graphical lasso on the target
  std::vector<std::string> warnings;
};

struct TransGlassoEstimate {
  Matrix omega0;
  double lambda_m = 0.0;
  std::vector<double> psi_lambdas;  // per source in the final fit
  std::vector<int> informative_set;  // 1-based source ids used in the final fit
  PipelineDiagnostics diagnostics;
};

/// sum_k alpha_k (initial_k - psi_k) with psi_0 = 0; `psis` holds sources 1..K.
Matrix combine(std::span<const Matrix> initials, std::span<const Matrix> psis,
               std::span<const double> alphas);

/// (n0 + nk) ||(S0 Psi Sk + Sk Psi S0)/2 - S0 + Sk||_F + log(n0 + nk) |Psi|_0.
double bic_dtrace(const Matrix& sigma0, const Matrix& sigmak, const Matrix& psi, Eigen::Index n0,
                  Eigen::Index nk, double zero_tol = 0.0);

/// N (<S0, Omega> - log det Omega) + log N |Omega|_0, or +inf when Omega is not PD.
double bic_trans(const Matrix& sigma0, const Matrix& omega0, Eigen::Index n_total,
                 double zero_tol = 1e-8);

/// 30 log-spaced values from |S0 - Sk|_inf.
TuningGrid default_psi_grid(const Matrix& sigma0, const Matrix& sigmak);
/// 30 log-spaced values from max_k |S_k|_inf.
TuningGrid default_lambda_m_grid(const ProblemInstance& problem);

/// Warm-started D-Trace sweep returning the BIC minimiser among converged
/// candidates (ties toward larger lambda).
PsiSelection select_lambda_psi(const Matrix& sigma0, const Matrix& sigmak, Eigen::Index n0,
                               Eigen::Index nk, const TuningGrid& grid,
                               const DtraceConfig& config, double zero_tol = 0.0);

/// Warm-started ADMM sweep over lambda_M with fixed `psis` (sources 1..K).
LambdaMSelection select_lambda_m(const ProblemInstance& problem, std::span<const Matrix> psis,
                                 const TuningGrid& grid, const AdmmConfig& config,
                                 double zero_tol = 1e-8);

/// Held-out loss (1/2d) [mean_i x_i^T Omega x_i - log det Omega] + log(pi)/2.
double cv_error(const StudyData& validation, const Matrix& omega0);

/// Ranks 1..K by ascending support size, ties by source index.
std::vector<int> rank_sources(std::span<const std::size_t> support_sizes);
std::vector<int> rank_sources(std::span<const DiffNetwork> psis);

/// Seeded shuffle of 0..n-1 dealt into M folds whose sizes differ by at most 1.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// Trans-Glasso on all sources: D-Trace BIC per source, then lambda_M by BIC.
TransGlassoEstimate fit_trans_glasso(const ProblemInstance& problem, const PipelineConfig& config);

/// Trans-Glasso with the informative set chosen by source ranking plus
/// M-fold cross-validation on the target.
TransGlassoEstimate trans_glasso_cv(const StudyData& target, std::span<const StudyData> sources,
                                    const PipelineConfig& config);

}  // namespace transglasso
