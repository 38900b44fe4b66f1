#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "transglasso/common.hpp"

namespace transglasso {

/// One study's observations: rows are samples, columns are variables.
/// Study 0 is the target; sources are numbered 1..K.
struct StudyData {
  Matrix samples;
  int study_id = 0;

  Eigen::Index n() const { return samples.rows(); }
  Eigen::Index d() const { return samples.cols(); }
};

/// A sample covariance together with the number of rows it came from.
struct CovMatrix {
  Matrix matrix;
  Eigen::Index n = 0;

  Eigen::Index d() const { return matrix.rows(); }
};

/// Target and source covariances with weights alpha_k = n_k / N.
struct ProblemInstance {
  CovMatrix target_cov;
  std::vector<CovMatrix> source_covs;
  std::vector<double> weights;  // alpha_0..alpha_K
  Eigen::Index total_n = 0;

  std::size_t num_sources() const { return source_covs.size(); }
  Eigen::Index d() const { return target_cov.d(); }
  /// Study k's covariance, k = 0 being the target.
  const CovMatrix& cov(std::size_t k) const { return k == 0 ? target_cov : source_covs[k - 1]; }
};

/// Validates and wraps a sample matrix (n >= 2, d >= 1, finite entries).
StudyData make_study(Matrix samples, int study_id = 0);

/// Reads a comma-separated numeric file. Throws IoError, ParseError or DimensionError.
StudyData load_csv(const std::filesystem::path& path, bool has_header, int study_id = 0);

/// (1/n) sum_i x_i x_i^T, optionally after subtracting column means.
CovMatrix sample_covariance(const StudyData& data, bool center);

/// Covariances per study plus weights; throws DimensionError when d differs.
ProblemInstance build_problem(const StudyData& target, std::span<const StudyData> sources,
                              bool center);

/// Same as build_problem but from covariances that are already computed.
ProblemInstance build_problem_from_covs(CovMatrix target, std::vector<CovMatrix> sources);

/// Rows of `data` selected by index (used for cross-validation folds).
StudyData select_rows(const StudyData& data, std::span<const Eigen::Index> rows);

/// Writes a dense matrix as CSV with 17 significant digits.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

}  // namespace transglasso
