#include "transglasso/dtrace.hpp"

#include <cmath>

namespace transglasso {

namespace {

void check_dims(const Matrix& psi, const Matrix& sigma0, const Matrix& sigmak) {
  const auto d = sigma0.rows();
  if (sigma0.cols() != d || sigmak.rows() != d || sigmak.cols() != d || psi.rows() != d ||
      psi.cols() != d) {
    throw DimensionError("D-Trace inputs must all be d x d with the same d");
  }
}

double spectral_norm_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double dtrace_objective(const Matrix& psi, const Matrix& sigma0, const Matrix& sigmak) {
  check_dims(psi, sigma0, sigmak);
  const Matrix s0p = sigma0 * psi;
  const Matrix skp = sigmak * psi;
  const Matrix ps0 = psi * sigma0;
  const Matrix psk = psi * sigmak;
  const double quad = s0p.cwiseProduct(psk).sum() + skp.cwiseProduct(ps0).sum();
  return 0.25 * quad - psi.cwiseProduct(sigma0 - sigmak).sum();
}

Matrix dtrace_gradient(const Matrix& psi, const Matrix& sigma0, const Matrix& sigmak) {
  check_dims(psi, sigma0, sigmak);
  return 0.5 * (sigmak * psi * sigma0 + sigma0 * psi * sigmak) - (sigma0 - sigmak);
}

double default_step(const Matrix& sigma0, const Matrix& sigmak) {
  const double n0 = spectral_norm_sym(sigma0);
  const double nk = spectral_norm_sym(sigmak);
  if (!(n0 > 0.0) || !(nk > 0.0)) throw NumericError("step size needs nonzero covariances");
  return 1.0 / (n0 * nk);
}

DiffNetwork solve_dtrace(const Matrix& sigma0, const Matrix& sigmak, double lambda,
                         const DtraceConfig& config, const Matrix* warm_start,
                         const DtraceObserver& observer) {
  const Eigen::Index d = sigma0.rows();
  Matrix psi = warm_start != nullptr ? *warm_start : Matrix::Zero(d, d);
  check_dims(psi, sigma0, sigmak);
  if (lambda < 0.0) throw ContractError("D-Trace penalty must be nonnegative");
  const double eta = config.eta.value_or(default_step(sigma0, sigmak));
  if (!(eta > 0.0)) throw ContractError("D-Trace step size must be positive");

  const Matrix diff = sigma0 - sigmak;
  const double shrink = lambda * eta;
  DiffNetwork out;
  out.lambda = lambda;

  // Keeps G = Sk Psi S0. For symmetric Psi and covariances S0 Psi Sk = G^T,
  // so the gradient's sandwich term is (G + G^T) / 2.
  Matrix g = sigmak * psi * sigma0;
  for (int t = 1; t <= config.max_iter; ++t) {
    const Matrix a = psi - eta * (0.5 * (g + g.transpose()) - diff);
    Matrix next(d, d);
    for (Eigen::Index l = 0; l < d; ++l) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double v = a(j, l);
        const double mag = std::abs(v) - shrink;
        next(j, l) = mag > 0.0 ? std::copysign(mag, v) : 0.0;
      }
    }
    const Matrix step = next - psi;
    Matrix g_next = sigmak * next * sigma0;
    const Matrix g_step = g_next - g;
    const double r_d = (step / eta - 0.5 * (g_step + g_step.transpose())).norm();
    const double eps_d =
        config.eps_abs * static_cast<double>(d) +
        config.eps_rel * std::max(step.norm() / eta, 0.5 * g_step.norm());

    psi = next;
    g = std::move(g_next);
    if (!std::isfinite(r_d)) throw NumericError("non-finite D-Trace iterate");
    if (observer) observer(t, psi);
    out.iterations = t;
    if (r_d <= eps_d) {
      out.converged = true;
      break;
    }
  }

  out.psi = std::move(psi);
  out.support_size = count_nonzero(out.psi, 0.0);
  return out;
}

}  // namespace transglasso
