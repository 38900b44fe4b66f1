#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "transglasso/common.hpp"
#include "transglasso/study_data.hpp"

namespace transglasso {

/// Tolerances and limits for the multi-task ADMM solver and its inner
/// entrywise subproblem.
struct AdmmConfig {
  double rho = 1.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-4;
  int max_iter = 2000;
  double inner_eps_abs = 1e-6;
  double inner_eps_rel = 1e-6;
  int inner_max_iter = 500;

  /// Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

/// Full iterate of the ADMM: the shared/unique split (Y block), the
/// positive-definite slacks Omega_k (X block) and the scaled duals Z_k.
struct AdmmState {
  Matrix shared;                // Omega
  std::vector<Matrix> uniques;  // Gamma_0..Gamma_K
  std::vector<Matrix> slacks;   // Omega_0..Omega_K
  std::vector<Matrix> duals;    // Z_0..Z_K

  /// Omega = I, Gamma_k = 0, Z_k = I, slacks = I.
  static AdmmState initial(Eigen::Index d, std::size_t num_studies);

  std::size_t num_studies() const { return uniques.size(); }
  Matrix combined(std::size_t k) const { return shared + uniques[k]; }
};

struct ResidualReport {
  double r_pri = 0.0;
  double r_dual = 0.0;
  double eps_pri = 0.0;
  double eps_dual = 0.0;

  bool converged() const { return r_pri <= eps_pri && r_dual <= eps_dual; }
};

struct MtGlassoSolution {
  Matrix shared;                           // Omega-hat
  std::vector<Matrix> uniques;             // Gamma-hat_0..K
  std::vector<Matrix> initial_estimates;   // Omega-hat + Gamma-hat_k
  int iterations = 0;
  double final_r_pri = 0.0;
  double final_r_dual = 0.0;
  double final_eps_pri = 0.0;
  double final_eps_dual = 0.0;
  bool converged = false;
  long inner_nonconverged = 0;  // entrywise subproblems that hit inner_max_iter
  std::vector<std::string> warnings;
  AdmmState state;  // last iterate, reusable as a warm start
};

/// Positive-definite root of -alpha * inv(W) + rho * W - rho * C = 0.
/// Throws ContractError when `c_tilde` is not symmetric.
Matrix omega_k_update(const Matrix& c_tilde, double alpha_k, double rho);

inline double soft_threshold(double c, double lambda) {
  if (c > lambda) return c - lambda;
  if (c < -lambda) return c + lambda;
  return 0.0;
}

struct SplitProxConfig {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iter = 500;
};

struct SplitProxResult {
  double x = 0.0;
  std::vector<double> y;
  int iterations = 0;
  bool converged = false;
};

/// Minimises (rho/2) sum_k (x + y_k - c_k)^2 + lambda_m |x| + lambda_m sum_k sqrt(alpha_k) |y_k|
/// by alternating exact block updates, starting from x = 0, y = 0.
SplitProxResult shared_split_prox(std::span<const double> c, double lambda_m, double rho,
                                  std::span<const double> alphas, const SplitProxConfig& config);

/// Objective of the scalar split problem above.
double split_prox_objective(double x, std::span<const double> y, std::span<const double> c,
                            double lambda_m, double rho, std::span<const double> alphas);

/// Primal/dual residuals and their tolerances for `current`, using
/// `previous` for the change in Omega + Gamma_k.
ResidualReport residuals(const AdmmState& current, const AdmmState& previous, double rho,
                         double eps_abs, double eps_rel);

using AdmmObserver = std::function<void(int iteration, const AdmmState& state)>;

/// Multi-task graphical lasso: minimises
///   sum_k alpha_k (<Omega + Gamma_k, S_k> - log det(Omega + Gamma_k))
///     + lambda_m (|Omega|_1 + sum_k sqrt(alpha_k) |Gamma_k|_1)
/// over Omega + Gamma_k > 0. Non-convergence is reported through the
/// solution, not thrown; non-finite iterates throw NumericError.
MtGlassoSolution solve_mtglasso(const ProblemInstance& problem, double lambda_m,
                                const AdmmConfig& config, const AdmmState* warm_start = nullptr,
                                const AdmmObserver& observer = {});

}  // namespace transglasso
