#include "transglasso/admm_mtglasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace transglasso {

namespace {

// Positive root of rho w^2 - lambda w - alpha = 0, written to avoid
// cancellation when lambda is large and negative.
double positive_root(double lambda, double rho, double alpha) {
  const double s = std::sqrt(lambda * lambda + 4.0 * rho * alpha);
  if (lambda >= 0.0) return (lambda + s) / (2.0 * rho);
  return 2.0 * alpha / (s - lambda);
}

Matrix omega_update_unchecked(const Matrix& c_tilde, double alpha_k, double rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho * c_tilde);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed in Omega_k update");
  Vector w = es.eigenvalues();
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = positive_root(w(i), rho, alpha_k);
  const Matrix& u = es.eigenvectors();
  return symmetrize(u * w.asDiagonal() * u.transpose());
}

// Within a stretch where every y_k and x stay strictly active, one sweep of
// the alternating updates moves x by a constant delta and every y_k by
// -delta. Returns how many such sweeps can be applied in closed form after
// the iterate (x, y) without leaving the stretch or reaching the stopping
// test; zero when the current iterate is not in such a stretch.
long drift_steps(const double* c, const double* y, std::size_t m, const double* y_thresholds,
                 double x_threshold, double rho, const SplitProxConfig& cfg, double x,
                 double& delta) {
  const double inv_m = 1.0 / static_cast<double>(m);
  double shift = 0.0;
  double sum_abs = 0.0;
  double slope = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double u = c[k] - x;
    if (y[k] == 0.0 || !(std::abs(u) > y_thresholds[k])) return 0;
    const double s = u > 0.0 ? 1.0 : -1.0;
    shift += s * y_thresholds[k];
    sum_abs += std::abs(y[k]);
    slope -= s;
  }
  shift *= inv_m;
  const double arg = x + shift;
  if (!(std::abs(arg) > x_threshold)) return 0;
  const double sx = arg > 0.0 ? 1.0 : -1.0;
  delta = shift - sx * x_threshold;
  if (delta == 0.0) return 0;

  // Distance x can travel before some soft-threshold changes regime.
  double room = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    const double edge = c[k] > x ? c[k] - y_thresholds[k] : c[k] + y_thresholds[k];
    const double gap = (edge - x) / delta;
    if (gap > 0.0) room = std::min(room, gap);
  }
  const double x_edge = sx * x_threshold - shift;
  const double x_gap = (x_edge - x) / delta;
  if (x_gap > 0.0) room = std::min(room, x_gap);

  // Sweeps before the stopping test could pass: the residual stays at
  // rho * m * |delta| while sum |y| changes by slope * delta per sweep.
  double until_stop = std::numeric_limits<double>::infinity();
  const double target = (rho * static_cast<double>(m) * std::abs(delta) -
                         static_cast<double>(m) * cfg.eps_abs) / (cfg.eps_rel * rho);
  const double growth = slope * delta;
  if (sum_abs >= target) return 0;
  if (growth > 0.0) until_stop = (target - sum_abs) / growth;

  const double steps = std::min(room, until_stop) - 2.0;
  if (!(steps >= 1.0)) return 0;
  return steps > 1e9 ? 1000000000L : static_cast<long>(steps);
}

// Scratch-buffer version of the alternating x/y updates; y and y_prev have
// length m and are overwritten. Returns the iteration count, negative when
// max_iter was exhausted.
int split_prox_core(const double* c, double* y, double* y_prev, std::size_t m,
                    const double* y_thresholds, double x_threshold, double rho,
                    const SplitProxConfig& cfg, double& x) {
  for (std::size_t k = 0; k < m; ++k) y[k] = 0.0;
  x = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  int r = 0;
  while (r < cfg.max_iter) {
    ++r;
    double mean = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      y_prev[k] = y[k];
      mean += c[k] - y[k];
    }
    x = soft_threshold(mean * inv_m, x_threshold);
    double delta = 0.0;
    double norm_new = 0.0;
    double norm_old = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      y[k] = soft_threshold(c[k] - x, y_thresholds[k]);
      delta += y[k] - y_prev[k];
      norm_new += std::abs(y[k]);
      norm_old += std::abs(y_prev[k]);
    }
    const double r_sub = rho * std::abs(delta);
    const double eps_sub = static_cast<double>(m) * cfg.eps_abs +
                           cfg.eps_rel * rho * std::max(norm_new, norm_old);
    if (r_sub <= eps_sub) return r;

    double step = 0.0;
    const long jump = std::min<long>(
        drift_steps(c, y, m, y_thresholds, x_threshold, rho, cfg, x, step), cfg.max_iter - r);
    if (jump > 0) {
      x += static_cast<double>(jump) * step;
      for (std::size_t k = 0; k < m; ++k) y[k] = soft_threshold(c[k] - x, y_thresholds[k]);
      r += static_cast<int>(jump);
    }
  }
  return -cfg.max_iter;
}

double sum_sq_frobenius(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const auto& m : ms) s += m.squaredNorm();
  return s;
}

}  // namespace

void AdmmConfig::validate() const {
  if (!(rho > 0.0) || !(eps_abs > 0.0) || !(eps_rel > 0.0) || max_iter <= 0 ||
      !(inner_eps_abs > 0.0) || !(inner_eps_rel > 0.0) || inner_max_iter <= 0) {
    throw ConfigError("ADMM configuration values must all be strictly positive");
  }
}

AdmmState AdmmState::initial(Eigen::Index d, std::size_t num_studies) {
  AdmmState s;
  s.shared = Matrix::Identity(d, d);
  s.uniques.assign(num_studies, Matrix::Zero(d, d));
  s.slacks.assign(num_studies, Matrix::Identity(d, d));
  s.duals.assign(num_studies, Matrix::Identity(d, d));
  return s;
}

Matrix omega_k_update(const Matrix& c_tilde, double alpha_k, double rho) {
  if (c_tilde.rows() != c_tilde.cols()) throw ContractError("Omega_k update needs a square matrix");
  if (max_abs_asymmetry(c_tilde) > 1e-10 * std::max(1.0, max_abs(c_tilde))) {
    throw ContractError("Omega_k update needs a symmetric matrix");
  }
  if (!(rho > 0.0) || !(alpha_k > 0.0)) throw ContractError("rho and alpha_k must be positive");
  return omega_update_unchecked(c_tilde, alpha_k, rho);
}

SplitProxResult shared_split_prox(std::span<const double> c, double lambda_m, double rho,
                                  std::span<const double> alphas, const SplitProxConfig& config) {
  if (c.size() != alphas.size() || c.empty()) {
    throw ContractError("split prox needs one weight per study");
  }
  if (lambda_m < 0.0 || !(rho > 0.0)) throw ContractError("split prox needs lambda >= 0, rho > 0");
  const std::size_t m = c.size();
  std::vector<double> thresholds(m);
  for (std::size_t k = 0; k < m; ++k) thresholds[k] = lambda_m * std::sqrt(alphas[k]) / rho;
  SplitProxResult out;
  out.y.assign(m, 0.0);
  std::vector<double> y_prev(m, 0.0);
  const int it = split_prox_core(c.data(), out.y.data(), y_prev.data(), m, thresholds.data(),
                                 lambda_m / (rho * static_cast<double>(m)), rho, config, out.x);
  out.converged = it > 0;
  out.iterations = std::abs(it);
  return out;
}

double split_prox_objective(double x, std::span<const double> y, std::span<const double> c,
                            double lambda_m, double rho, std::span<const double> alphas) {
  double v = lambda_m * std::abs(x);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double r = x + y[k] - c[k];
    v += 0.5 * rho * r * r + lambda_m * std::sqrt(alphas[k]) * std::abs(y[k]);
  }
  return v;
}

ResidualReport residuals(const AdmmState& current, const AdmmState& previous, double rho,
                         double eps_abs, double eps_rel) {
  const std::size_t m = current.num_studies();
  const double d = static_cast<double>(current.shared.rows());
  double pri = 0.0;
  double dual = 0.0;
  double slack_norm = 0.0;
  double sum_norm = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const Matrix sum = current.combined(k);
    pri += (current.slacks[k] - sum).squaredNorm();
    dual += (sum - previous.combined(k)).squaredNorm();
    slack_norm += current.slacks[k].squaredNorm();
    sum_norm += sum.squaredNorm();
  }
  const double abs_term = eps_abs * d * std::sqrt(static_cast<double>(m));
  ResidualReport r;
  r.r_pri = std::sqrt(pri);
  r.r_dual = rho * std::sqrt(dual);
  r.eps_pri = abs_term + eps_rel * std::max(std::sqrt(slack_norm), std::sqrt(sum_norm));
  r.eps_dual = abs_term + eps_rel * std::sqrt(sum_sq_frobenius(current.duals));
  return r;
}

MtGlassoSolution solve_mtglasso(const ProblemInstance& problem, double lambda_m,
                                const AdmmConfig& config, const AdmmState* warm_start,
                                const AdmmObserver& observer) {
  config.validate();
  if (lambda_m < 0.0) throw ContractError("lambda_m must be nonnegative");
  const std::size_t m = problem.num_sources() + 1;
  const Eigen::Index d = problem.d();
  if (problem.weights.size() != m) throw ContractError("one weight per study is required");

  AdmmState state = warm_start != nullptr ? *warm_start : AdmmState::initial(d, m);
  if (state.num_studies() != m || state.shared.rows() != d) {
    throw ContractError("warm start does not match the problem shape");
  }
  const double rho = config.rho;

  std::vector<double> y_thresholds(m);
  for (std::size_t k = 0; k < m; ++k) {
    y_thresholds[k] = lambda_m * std::sqrt(problem.weights[k]) / rho;
  }
  const double x_threshold = lambda_m / (rho * static_cast<double>(m));
  const SplitProxConfig inner{config.inner_eps_abs, config.inner_eps_rel, config.inner_max_iter};

  std::vector<Matrix> c_check(m);
  std::vector<double> c(m), y(m), y_prev(m);
  MtGlassoSolution sol;
  ResidualReport report;

  for (int t = 1; t <= config.max_iter; ++t) {
    AdmmState previous = state;

    // X block: one eigen-based update per study.
    for (std::size_t k = 0; k < m; ++k) {
      const double alpha = problem.weights[k];
      Matrix c_tilde = -state.duals[k] + state.combined(k) - (alpha / rho) * problem.cov(k).matrix;
      state.slacks[k] = omega_update_unchecked(symmetrize(c_tilde), alpha, rho);
      c_check[k] = state.slacks[k] + state.duals[k];
    }

    // Y block: independent scalar split problems per entry, mirrored to
    // keep Omega and Gamma_k exactly symmetric.
    for (Eigen::Index l = 0; l < d; ++l) {
      for (Eigen::Index j = 0; j <= l; ++j) {
        for (std::size_t k = 0; k < m; ++k) c[k] = c_check[k](j, l);
        double x = 0.0;
        const int it = split_prox_core(c.data(), y.data(), y_prev.data(), m, y_thresholds.data(),
                                       x_threshold, rho, inner, x);
        if (it < 0) ++sol.inner_nonconverged;
        state.shared(j, l) = x;
        state.shared(l, j) = x;
        for (std::size_t k = 0; k < m; ++k) {
          state.uniques[k](j, l) = y[k];
          state.uniques[k](l, j) = y[k];
        }
      }
    }

    // Dual update in scaled form.
    for (std::size_t k = 0; k < m; ++k) {
      state.duals[k] += state.slacks[k] - state.combined(k);
    }

    report = residuals(state, previous, rho, config.eps_abs, config.eps_rel);
    if (!std::isfinite(report.r_pri) || !std::isfinite(report.r_dual)) {
      throw NumericError("non-finite ADMM iterate at iteration " + std::to_string(t));
    }
    if (observer) observer(t, state);
    sol.iterations = t;
    if (report.converged()) {
      sol.converged = true;
      break;
    }
  }

  sol.final_r_pri = report.r_pri;
  sol.final_r_dual = report.r_dual;
  sol.final_eps_pri = report.eps_pri;
  sol.final_eps_dual = report.eps_dual;
  sol.shared = state.shared;
  sol.uniques = state.uniques;
  for (std::size_t k = 0; k < m; ++k) {
    sol.initial_estimates.push_back(state.combined(k));
    const double lo = min_eigenvalue(sol.initial_estimates.back());
    if (lo < -10.0 * report.eps_pri) {
      std::ostringstream msg;
      msg << "initial estimate " << k << " has minimum eigenvalue " << lo;
      sol.warnings.push_back(msg.str());
    }
  }
  sol.state = std::move(state);
  return sol;
}

}  // namespace transglasso
