#include "transglasso/baselines.hpp"

#include <cmath>
#include <limits>

#include "transglasso/pipeline.hpp"

namespace transglasso {

namespace {

double positive_root(double lambda, double rho) {
  const double s = std::sqrt(lambda * lambda + 4.0 * rho);
  if (lambda >= 0.0) return (lambda + s) / (2.0 * rho);
  return 2.0 / (s - lambda);
}

}  // namespace

GlassoEstimate glasso(const Matrix& sigma, double lambda, const AdmmConfig& config,
                      GlassoState* state) {
  config.validate();
  if (lambda < 0.0) throw ContractError("glasso penalty must be nonnegative");
  const Eigen::Index d = sigma.rows();
  if (sigma.cols() != d) throw DimensionError("glasso needs a square covariance");

  const double rho = config.rho;
  Matrix y = Matrix::Identity(d, d);
  Matrix z = Matrix::Identity(d, d);
  if (state != nullptr && state->y.rows() == d) {
    y = state->y;
    z = state->z;
  }
  const double abs_term = config.eps_abs * static_cast<double>(d);
  const double shrink = lambda / rho;

  GlassoEstimate out;
  out.lambda = lambda;
  for (int t = 1; t <= config.max_iter; ++t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(rho * (y - z) - sigma));
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed in glasso");
    Vector w = es.eigenvalues();
    for (Eigen::Index i = 0; i < d; ++i) w(i) = positive_root(w(i), rho);
    const Matrix x = symmetrize(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose());

    const Matrix v = x + z;
    Matrix y_next(d, d);
    for (Eigen::Index l = 0; l < d; ++l) {
      for (Eigen::Index j = 0; j < d; ++j) y_next(j, l) = soft_threshold(v(j, l), shrink);
    }
    z += x - y_next;

    const double r_pri = (x - y_next).norm();
    const double r_dual = rho * (y_next - y).norm();
    const double eps_pri = abs_term + config.eps_rel * std::max(x.norm(), y_next.norm());
    const double eps_dual = abs_term + config.eps_rel * z.norm();
    y = std::move(y_next);
    if (!std::isfinite(r_pri) || !std::isfinite(r_dual)) {
      throw NumericError("non-finite glasso iterate");
    }
    out.iterations = t;
    if (r_pri <= eps_pri && r_dual <= eps_dual) {
      out.converged = true;
      break;
    }
  }
  out.omega = y;
  if (state != nullptr) {
    state->y = y;
    state->z = z;
  }
  return out;
}

TuningGrid default_glasso_grid(const Matrix& sigma) {
  return TuningGrid::log_spaced(max_abs(sigma));
}

GlassoEstimate glasso_bic(const Matrix& sigma, Eigen::Index n_total, const TuningGrid& grid,
                          const AdmmConfig& config, double zero_tol) {
  grid.validate();
  GlassoState state;
  GlassoEstimate best;
  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  for (const double lambda : grid.values) {
    GlassoEstimate est = glasso(sigma, lambda, config, &state);
    const double bic = bic_trans(sigma, est.omega, n_total, zero_tol);
    trace.push_back(bic);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(est);
    }
  }
  if (!std::isfinite(best_bic)) {
    throw SelectionError("graphical lasso: no grid value gave a positive-definite estimate");
  }
  best.grid = grid.values;
  best.bic_trace = std::move(trace);
  return best;
}

GlassoEstimate glasso_target(const ProblemInstance& problem,
                             const std::optional<TuningGrid>& grid, const AdmmConfig& config,
                             double zero_tol) {
  const Matrix& sigma = problem.target_cov.matrix;
  return glasso_bic(sigma, problem.target_cov.n, grid ? *grid : default_glasso_grid(sigma), config,
                    zero_tol);
}

Matrix pooled_covariance(const ProblemInstance& problem) {
  Matrix pooled = problem.weights[0] * problem.target_cov.matrix;
  for (std::size_t k = 1; k <= problem.num_sources(); ++k) {
    pooled += problem.weights[k] * problem.cov(k).matrix;
  }
  return symmetrize(pooled);
}

GlassoEstimate glasso_pooled(const ProblemInstance& problem,
                             const std::optional<TuningGrid>& grid, const AdmmConfig& config,
                             double zero_tol) {
  const Matrix pooled = pooled_covariance(problem);
  return glasso_bic(pooled, problem.total_n, grid ? *grid : default_glasso_grid(pooled), config,
                    zero_tol);
}

}  // namespace transglasso
