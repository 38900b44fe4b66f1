#pragma once

#include <functional>
#include <optional>

#include "transglasso/common.hpp"

namespace transglasso {

struct DtraceConfig {
  std::optional<double> eta;  // defaults to default_step(sigma0, sigmak)
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  int max_iter = 5000;
};

/// Estimated differential network Psi_k = Omega_k - Omega_0.
struct DiffNetwork {
  Matrix psi;
  double lambda = 0.0;
  std::size_t support_size = 0;
  double zero_tol = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Smooth D-Trace loss
///   1/4 (<S0 Psi, Psi Sk> + <Sk Psi, Psi S0>) - <Psi, S0 - Sk>.
double dtrace_objective(const Matrix& psi, const Matrix& sigma0, const Matrix& sigmak);

/// Gradient 1/2 (Sk Psi S0 + S0 Psi Sk) - (S0 - Sk).
Matrix dtrace_gradient(const Matrix& psi, const Matrix& sigma0, const Matrix& sigmak);

/// 1 / (||S0||_2 ||Sk||_2), the largest step with a descent guarantee.
double default_step(const Matrix& sigma0, const Matrix& sigmak);

using DtraceObserver = std::function<void(int iteration, const Matrix& psi)>;

/// Proximal gradient descent on the L1-penalised D-Trace loss, starting from
/// `warm_start` (zero when null). Non-convergence is flagged, not thrown.
DiffNetwork solve_dtrace(const Matrix& sigma0, const Matrix& sigmak, double lambda,
                         const DtraceConfig& config = {}, const Matrix* warm_start = nullptr,
                         const DtraceObserver& observer = {});

}  // namespace transglasso
