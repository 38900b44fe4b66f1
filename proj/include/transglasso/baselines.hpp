#pragma once

#include <optional>
#include <vector>

#include "transglasso/admm_mtglasso.hpp"
#include "transglasso/study_data.hpp"
#include "transglasso/tuning_grid.hpp"

namespace transglasso {

struct GlassoEstimate {
  Matrix omega;
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> grid;       // filled by the BIC sweeps
  std::vector<double> bic_trace;  // aligned with grid
};

/// Warm-start iterate for the single-matrix ADMM: Y is the sparse copy,
/// Z the scaled dual.
struct GlassoState {
  Matrix y;
  Matrix z;
};

/// Graphical lasso min <Omega, S> - log det Omega + lambda |Omega|_1 with the
/// diagonal penalised, solved by the same eigen-update / soft-threshold ADMM
/// as the multi-task solver.
GlassoEstimate glasso(const Matrix& sigma, double lambda, const AdmmConfig& config,
                      GlassoState* state = nullptr);

/// Default grid for a single covariance: 30 log-spaced values from |S|_inf.
TuningGrid default_glasso_grid(const Matrix& sigma);

/// Sweeps `grid` on `sigma`, keeping the candidate with the smallest
/// N * (<S, Omega> - log det Omega) + log N * |Omega|_0. Ties go to the larger
/// penalty. Throws SelectionError when no candidate is positive definite.
GlassoEstimate glasso_bic(const Matrix& sigma, Eigen::Index n_total, const TuningGrid& grid,
                          const AdmmConfig& config, double zero_tol);

/// Graphical lasso on the target covariance only (N = n_0).
GlassoEstimate glasso_target(const ProblemInstance& problem,
                             const std::optional<TuningGrid>& grid, const AdmmConfig& config,
                             double zero_tol = 1e-8);

/// Graphical lasso on the weighted pooled covariance sum_k alpha_k S_k (N = total).
GlassoEstimate glasso_pooled(const ProblemInstance& problem,
                             const std::optional<TuningGrid>& grid, const AdmmConfig& config,
                             double zero_tol = 1e-8);

Matrix pooled_covariance(const ProblemInstance& problem);

}  // namespace transglasso
