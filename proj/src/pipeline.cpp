#include "transglasso/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>

#include "transglasso/parallel.hpp"

namespace transglasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log det via Cholesky; nullopt when `m` is not positive definite.
std::optional<double> log_det_pd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) return std::nullopt;
  return 2.0 * diag.array().log().sum();
}

bool is_pd(const Matrix& m) { return min_eigenvalue(symmetrize(m)) > 0.0; }

}  // namespace

TuningGrid TuningGrid::log_spaced(double lambda_max, double min_ratio, int count) {
  if (!(lambda_max > 0.0) || !(min_ratio > 0.0) || min_ratio >= 1.0 || count < 1) {
    throw ConfigError("log-spaced grid needs lambda_max > 0, 0 < ratio < 1, count >= 1");
  }
  TuningGrid g;
  if (count == 1) {
    g.values.push_back(lambda_max);
    return g;
  }
  const double step = std::log(min_ratio) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) g.values.push_back(lambda_max * std::exp(step * i));
  return g;
}

void TuningGrid::validate() const {
  if (values.empty()) throw ConfigError("tuning grid is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw ConfigError("tuning grid values must be positive and finite");
    }
    if (i > 0 && !(values[i] < values[i - 1])) {
      throw ConfigError("tuning grid must be strictly decreasing");
    }
  }
}

Matrix combine(std::span<const Matrix> initials, std::span<const Matrix> psis,
               std::span<const double> alphas) {
  if (initials.empty() || initials.size() != alphas.size() || psis.size() + 1 != initials.size()) {
    throw ContractError("combine needs K+1 initial estimates, K differential networks, K+1 weights");
  }
  const double total = std::accumulate(alphas.begin(), alphas.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw ContractError("combine weights must sum to 1");
  const auto d = initials[0].rows();
  Matrix out = alphas[0] * initials[0];
  for (std::size_t k = 1; k < initials.size(); ++k) {
    if (initials[k].rows() != d || psis[k - 1].rows() != d) {
      throw ContractError("combine inputs have mismatched dimensions");
    }
    out += alphas[k] * (initials[k] - psis[k - 1]);
  }
  return out;
}

double bic_dtrace(const Matrix& sigma0, const Matrix& sigmak, const Matrix& psi, Eigen::Index n0,
                  Eigen::Index nk, double zero_tol) {
  const auto d = sigma0.rows();
  if (sigmak.rows() != d || psi.rows() != d || sigma0.cols() != d || psi.cols() != d) {
    throw DimensionError("bic_dtrace inputs must share dimensions");
  }
  const double n = static_cast<double>(n0 + nk);
  const Matrix resid = 0.5 * (sigma0 * psi * sigmak + sigmak * psi * sigma0) - sigma0 + sigmak;
  return n * resid.norm() + std::log(n) * static_cast<double>(count_nonzero(psi, zero_tol));
}

double bic_trans(const Matrix& sigma0, const Matrix& omega0, Eigen::Index n_total,
                 double zero_tol) {
  if (sigma0.rows() != omega0.rows() || sigma0.cols() != omega0.cols()) {
    throw DimensionError("bic_trans inputs must share dimensions");
  }
  if (!is_pd(omega0)) return kInf;
  const auto logdet = log_det_pd(symmetrize(omega0));
  if (!logdet) return kInf;
  const double n = static_cast<double>(n_total);
  return n * (sigma0.cwiseProduct(omega0).sum() - *logdet) +
         std::log(n) * static_cast<double>(count_nonzero(omega0, zero_tol));
}

TuningGrid default_psi_grid(const Matrix& sigma0, const Matrix& sigmak) {
  double lmax = max_abs(sigma0 - sigmak);
  // Identical covariances: every penalty gives Psi = 0, any positive bracket works.
  if (!(lmax > 0.0)) lmax = 1.0;
  return TuningGrid::log_spaced(lmax);
}

TuningGrid default_lambda_m_grid(const ProblemInstance& problem) {
  double lmax = 0.0;
  for (std::size_t k = 0; k <= problem.num_sources(); ++k) {
    lmax = std::max(lmax, max_abs(problem.cov(k).matrix));
  }
  if (!(lmax > 0.0)) throw NumericError("all covariances are zero");
  return TuningGrid::log_spaced(lmax);
}

PsiSelection select_lambda_psi(const Matrix& sigma0, const Matrix& sigmak, Eigen::Index n0,
                               Eigen::Index nk, const TuningGrid& grid,
                               const DtraceConfig& config, double zero_tol) {
  grid.validate();
  PsiSelection sel;
  sel.grid = grid.values;
  double best = kInf;
  bool any = false;
  Matrix warm = Matrix::Zero(sigma0.rows(), sigma0.cols());
  for (const double lambda : grid.values) {
    DiffNetwork net = solve_dtrace(sigma0, sigmak, lambda, config, &warm);
    warm = net.psi;
    net.zero_tol = zero_tol;
    net.support_size = count_nonzero(net.psi, zero_tol);
    const double bic = bic_dtrace(sigma0, sigmak, net.psi, n0, nk, zero_tol);
    sel.bic_trace.push_back(bic);
    sel.converged.push_back(net.converged ? 1 : 0);
    if (net.converged && bic < best) {
      best = bic;
      any = true;
      sel.lambda = lambda;
      sel.psi = std::move(net);
    }
  }
  if (!any) {
    std::ostringstream msg;
    msg << "D-Trace selection: none of the " << grid.values.size()
        << " grid values converged (max_iter " << config.max_iter << ")";
    throw SelectionError(msg.str());
  }
  return sel;
}

LambdaMSelection select_lambda_m(const ProblemInstance& problem, std::span<const Matrix> psis,
                                 const TuningGrid& grid, const AdmmConfig& config,
                                 double zero_tol) {
  grid.validate();
  if (psis.size() != problem.num_sources()) {
    throw ContractError("select_lambda_m needs one differential network per source");
  }
  LambdaMSelection sel;
  sel.grid = grid.values;
  double best = kInf;
  std::optional<AdmmState> warm;
  for (const double lambda : grid.values) {
    MtGlassoSolution sol = solve_mtglasso(problem, lambda, config, warm ? &*warm : nullptr);
    warm = sol.state;
    Matrix omega0 = combine(sol.initial_estimates, psis, problem.weights);
    const double bic = bic_trans(problem.target_cov.matrix, omega0, problem.total_n, zero_tol);
    sel.bic_trace.push_back(bic);
    sel.converged.push_back(sol.converged ? 1 : 0);
    if (bic < best) {
      best = bic;
      sel.lambda_m = lambda;
      sel.omega0 = std::move(omega0);
      sel.solution = std::move(sol);
    }
  }
  if (!std::isfinite(best)) {
    throw SelectionError("lambda_M selection: no grid value gave a positive-definite estimate");
  }
  return sel;
}

double cv_error(const StudyData& validation, const Matrix& omega0) {
  if (validation.n() < 1) throw DimensionError("validation set is empty");
  const auto d = omega0.rows();
  if (validation.d() != d || omega0.cols() != d) {
    throw DimensionError("validation data and estimate dimensions differ");
  }
  if (!is_pd(omega0)) return kInf;
  const auto logdet = log_det_pd(symmetrize(omega0));
  if (!logdet) return kInf;
  // tr(x x^T Omega) = x^T Omega x, row by row.
  const Matrix xo = validation.samples * omega0;
  const double mean_quad =
      xo.cwiseProduct(validation.samples).sum() / static_cast<double>(validation.n());
  return (mean_quad - *logdet) / (2.0 * static_cast<double>(d)) + 0.5 * std::log(std::numbers::pi);
}

std::vector<int> rank_sources(std::span<const std::size_t> support_sizes) {
  std::vector<std::size_t> order(support_sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return support_sizes[a] < support_sizes[b];
  });
  std::vector<int> ranks(support_sizes.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

std::vector<int> rank_sources(std::span<const DiffNetwork> psis) {
  std::vector<std::size_t> sizes;
  sizes.reserve(psis.size());
  for (const auto& p : psis) sizes.push_back(p.support_size);
  return rank_sources(sizes);
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (n < folds) {
    throw DimensionError("target has " + std::to_string(n) + " samples, fewer than " +
                         std::to_string(folds) + " folds");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with a portable integer distribution.
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i % out.size()].push_back(idx[i]);
  return out;
}

namespace {

// i is 0-based over sources.
PsiSelection select_psi(const ProblemInstance& problem, std::size_t i,
                        const PipelineConfig& config) {
  const auto& s0 = problem.target_cov;
  const auto& sk = problem.cov(i + 1);
  const TuningGrid grid =
      config.lambda_psi_grid ? *config.lambda_psi_grid : default_psi_grid(s0.matrix, sk.matrix);
  return select_lambda_psi(s0.matrix, sk.matrix, s0.n, sk.n, grid, config.dtrace,
                           config.psi_zero_tol);
}

std::vector<PsiSelection> select_all_psis(const ProblemInstance& problem,
                                          const PipelineConfig& config) {
  std::vector<PsiSelection> out(problem.num_sources());
  parallel_for(out.size(), config.threads,
               [&](std::size_t i) { out[i] = select_psi(problem, i, config); });
  return out;
}

TransGlassoEstimate fit_with_psis(const ProblemInstance& problem,
                                  std::span<const PsiSelection> selections,
                                  const PipelineConfig& config) {
  std::vector<Matrix> psis;
  psis.reserve(selections.size());
  for (const auto& s : selections) psis.push_back(s.psi.psi);
  const TuningGrid grid =
      config.lambda_m_grid ? *config.lambda_m_grid : default_lambda_m_grid(problem);
  LambdaMSelection sel = select_lambda_m(problem, psis, grid, config.admm, config.omega_zero_tol);

  TransGlassoEstimate est;
  est.omega0 = std::move(sel.omega0);
  est.lambda_m = sel.lambda_m;
  auto& diag = est.diagnostics;
  diag.admm_converged = sel.solution.converged;
  diag.lambda_m_grid = sel.grid;
  diag.lambda_m_bic = sel.bic_trace;
  diag.warnings = sel.solution.warnings;
  for (const auto& s : selections) {
    est.psi_lambdas.push_back(s.lambda);
    diag.dtrace_converged.push_back(s.psi.converged ? 1 : 0);
    diag.psi_bic.push_back(s.bic_trace);
    diag.psi_support.push_back(s.psi.support_size);
  }
  return est;
}

TransGlassoEstimate target_only_estimate(const ProblemInstance& problem,
                                         const PipelineConfig& config) {
  GlassoEstimate g =
      glasso_target(problem, config.lambda_m_grid, config.admm, config.omega_zero_tol);
  TransGlassoEstimate est;
  est.omega0 = std::move(g.omega);
  est.lambda_m = g.lambda;
  est.diagnostics.admm_converged = g.converged;
  est.diagnostics.lambda_m_grid = std::move(g.grid);
  est.diagnostics.lambda_m_bic = std::move(g.bic_trace);
  est.diagnostics.target_only = true;
  return est;
}

ProblemInstance subset_problem(const CovMatrix& target, std::span<const CovMatrix> sources,
                               std::span<const std::size_t> chosen) {
  std::vector<CovMatrix> covs;
  for (const auto k : chosen) covs.push_back(sources[k]);
  return build_problem_from_covs(target, std::move(covs));
}

}  // namespace

TransGlassoEstimate fit_trans_glasso(const ProblemInstance& problem,
                                     const PipelineConfig& config) {
  const auto selections = select_all_psis(problem, config);
  TransGlassoEstimate est = fit_with_psis(problem, selections, config);
  for (std::size_t k = 1; k <= problem.num_sources(); ++k) {
    est.informative_set.push_back(static_cast<int>(k));
  }
  return est;
}

TransGlassoEstimate trans_glasso_cv(const StudyData& target, std::span<const StudyData> sources,
                                    const PipelineConfig& config) {
  const std::size_t k_sources = sources.size();
  const ProblemInstance full = build_problem(target, sources, config.center);
  if (k_sources == 0) return target_only_estimate(full, config);

  const auto folds = make_folds(target.n(), config.folds, config.seed);

  // Ranking from the full-data differential networks.
  const auto full_psis = select_all_psis(full, config);
  std::vector<std::size_t> supports;
  for (const auto& s : full_psis) supports.push_back(s.psi.support_size);
  const std::vector<int> ranks = rank_sources(supports);

  // Sources ordered by rank: by_rank[r] is the source (0-based) with rank r+1.
  std::vector<std::size_t> by_rank(k_sources);
  for (std::size_t i = 0; i < k_sources; ++i) by_rank[ranks[i] - 1] = i;

  std::vector<CovMatrix> source_covs;
  for (std::size_t i = 0; i < k_sources; ++i) source_covs.push_back(full.cov(i + 1));

  // cv[m][kc] = CV_m for K_chosen = kc.
  std::vector<std::vector<double>> cv(folds.size(), std::vector<double>(k_sources + 1, kInf));
  parallel_for(folds.size(), config.threads, [&](std::size_t m) {
    std::vector<Eigen::Index> train_rows;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (f != m) train_rows.insert(train_rows.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::vector<Eigen::Index> val_rows = folds[m];
    std::sort(val_rows.begin(), val_rows.end());
    const StudyData train = select_rows(target, train_rows);
    StudyData val = select_rows(target, val_rows);
    if (config.center) {
      val.samples = val.samples.rowwise() - train.samples.colwise().mean();
    }
    const CovMatrix train_cov = sample_covariance(train, config.center);

    PipelineConfig inner = config;
    inner.threads = 1;
    const ProblemInstance target_only = build_problem_from_covs(train_cov, {});
    try {
      cv[m][0] = cv_error(val, target_only_estimate(target_only, inner).omega0);
    } catch (const SelectionError&) {
    }

    // One D-Trace selection per source for this fold, reused for every
    // K_chosen. A source whose sweep fails excludes every K_chosen using it.
    const ProblemInstance all = build_problem_from_covs(train_cov, source_covs);
    std::vector<std::optional<PsiSelection>> fold_psis(k_sources);
    for (std::size_t i = 0; i < k_sources; ++i) {
      try {
        fold_psis[i] = select_psi(all, i, inner);
      } catch (const SelectionError&) {
      }
    }
    for (std::size_t kc = 1; kc <= k_sources; ++kc) {
      std::vector<std::size_t> chosen(by_rank.begin(), by_rank.begin() + kc);
      std::sort(chosen.begin(), chosen.end());
      const ProblemInstance sub = subset_problem(train_cov, source_covs, chosen);
      std::vector<PsiSelection> sub_psis;
      for (const auto k : chosen) {
        if (fold_psis[k]) sub_psis.push_back(*fold_psis[k]);
      }
      if (sub_psis.size() != chosen.size()) continue;
      try {
        cv[m][kc] = cv_error(val, fit_with_psis(sub, sub_psis, inner).omega0);
      } catch (const SelectionError&) {
        cv[m][kc] = kInf;
      }
    }
  });

  std::vector<double> cv_mean(k_sources + 1, 0.0);
  for (std::size_t kc = 0; kc <= k_sources; ++kc) {
    for (std::size_t m = 0; m < folds.size(); ++m) cv_mean[kc] += cv[m][kc];
    cv_mean[kc] /= static_cast<double>(folds.size());
  }
  const auto best_it = std::min_element(cv_mean.begin(), cv_mean.end());
  const std::size_t k_star = static_cast<std::size_t>(best_it - cv_mean.begin());

  TransGlassoEstimate est;
  if (k_star == 0) {
    est = target_only_estimate(full, config);
  } else {
    std::vector<std::size_t> chosen(by_rank.begin(), by_rank.begin() + k_star);
    std::sort(chosen.begin(), chosen.end());
    const ProblemInstance sub = subset_problem(full.target_cov, source_covs, chosen);
    std::vector<PsiSelection> sub_psis;
    for (const auto k : chosen) sub_psis.push_back(full_psis[k]);
    est = fit_with_psis(sub, sub_psis, config);
    for (const auto k : chosen) est.informative_set.push_back(static_cast<int>(k) + 1);
  }
  est.diagnostics.ranks = ranks;
  est.diagnostics.cv_errors = cv_mean;
  est.diagnostics.k_chosen = static_cast<int>(k_star);
  return est;
}

}  // namespace transglasso
