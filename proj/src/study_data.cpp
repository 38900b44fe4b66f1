#include "transglasso/study_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>

namespace transglasso {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  double value = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
      !std::isfinite(value)) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " +
                         std::to_string(row) + ", column " + std::to_string(col),
                     row, col);
  }
  return value;
}

void check_psd(const CovMatrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov.matrix, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
  if (lo < -1e-10 * std::max(1.0, hi)) {
    std::clog << "warning: sample covariance has eigenvalue " << lo
              << " below the PSD tolerance\n";
  }
}

}  // namespace

StudyData make_study(Matrix samples, int study_id) {
  if (samples.rows() < 2) {
    throw DimensionError("a study needs at least 2 observations, got " +
                         std::to_string(samples.rows()));
  }
  if (samples.cols() < 1) throw DimensionError("a study needs at least 1 variable");
  if (!samples.allFinite()) throw NumericError("study contains non-finite values");
  return StudyData{std::move(samples), study_id};
}

StudyData load_csv(const std::filesystem::path& path, bool has_header, int study_id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    if (trim(line).empty()) continue;
    const std::size_t row_no = rows.size() + 1;
    std::vector<double> values;
    std::string_view rest(line);
    std::size_t col = 1;
    for (;;) {
      const auto comma = rest.find(',');
      values.push_back(parse_cell(rest.substr(0, comma), row_no, col));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      ++col;
    }
    if (width == 0) {
      width = values.size();
    } else if (values.size() != width) {
      throw ParseError(path.string() + ": row " + std::to_string(row_no) + " has " +
                           std::to_string(values.size()) + " columns, expected " +
                           std::to_string(width),
                       row_no, values.size());
    }
    rows.push_back(std::move(values));
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  if (rows.size() < 2) {
    throw DimensionError(path.string() + ": need at least 2 data rows, found " +
                         std::to_string(rows.size()));
  }

  Matrix samples(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) samples(i, j) = rows[i][j];
  }
  return make_study(std::move(samples), study_id);
}

CovMatrix sample_covariance(const StudyData& data, bool center) {
  const Eigen::Index n = data.n();
  if (n < 2) throw DimensionError("sample covariance needs n >= 2");
  Matrix cov;
  if (center) {
    const Matrix centered = data.samples.rowwise() - data.samples.colwise().mean();
    cov = centered.transpose() * centered / static_cast<double>(n);
  } else {
    cov = data.samples.transpose() * data.samples / static_cast<double>(n);
  }
  CovMatrix out{symmetrize(cov), n};
  check_psd(out);
  return out;
}

ProblemInstance build_problem(const StudyData& target, std::span<const StudyData> sources,
                              bool center) {
  for (const auto& s : sources) {
    if (s.d() != target.d()) {
      throw DimensionError("study " + std::to_string(s.study_id) + " has d = " +
                           std::to_string(s.d()) + " but the target has d = " +
                           std::to_string(target.d()));
    }
  }
  std::vector<CovMatrix> covs;
  covs.reserve(sources.size());
  for (const auto& s : sources) covs.push_back(sample_covariance(s, center));
  return build_problem_from_covs(sample_covariance(target, center), std::move(covs));
}

ProblemInstance build_problem_from_covs(CovMatrix target, std::vector<CovMatrix> sources) {
  ProblemInstance p;
  p.total_n = target.n;
  for (const auto& s : sources) {
    if (s.d() != target.d()) throw DimensionError("covariance dimensions differ across studies");
    p.total_n += s.n;
  }
  const auto total = static_cast<double>(p.total_n);
  p.weights.push_back(static_cast<double>(target.n) / total);
  for (const auto& s : sources) p.weights.push_back(static_cast<double>(s.n) / total);
  p.target_cov = std::move(target);
  p.source_covs = std::move(sources);
  return p;
}

StudyData select_rows(const StudyData& data, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.d());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.samples.row(rows[i]);
  return StudyData{std::move(out), data.study_id};
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace transglasso
