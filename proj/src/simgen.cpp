#include "transglasso/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "json.hpp"
#include "transglasso/parallel.hpp"

namespace transglasso {

namespace {

using Rng = std::mt19937_64;
using Position = std::pair<Eigen::Index, Eigen::Index>;

constexpr double kUniqueWeight = 3.0;
constexpr double kMinEigen = 0.1;
constexpr double kEdgeProbability = 0.02;

Matrix banded(int d, int bandwidth) {
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const int gap = std::abs(i - j);
      if (gap <= bandwidth) m(i, j) = 5.0 * std::pow(0.6, gap);
    }
  }
  return m;
}

Matrix erdos_renyi(int d, Rng& rng) {
  Matrix m = 5.0 * Matrix::Identity(d, d);
  boost::random::uniform_01<double> unit;
  boost::random::uniform_real_distribution<double> weight(-kUniqueWeight, kUniqueWeight);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (unit(rng) < kEdgeProbability) {
        const double w = weight(rng);
        m(i, j) = w;
        m(j, i) = w;
      }
    }
  }
  return m;
}

// First `count` entries of a partial Fisher-Yates shuffle.
std::vector<Position> sample_without_replacement(std::vector<Position> pool, std::size_t count,
                                                 Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    boost::random::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

// Upper-triangle positions (i < j) eligible for unique entries.
std::vector<Position> candidate_positions(ModelId model, int d, const Matrix& shared) {
  std::vector<Position> pool;
  if (model == ModelId::III) {
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        if (shared(i, j) == 0.0) pool.emplace_back(i, j);
      }
    }
  } else {
    const int half = d / 2;
    for (int i = 0; i < half; ++i) {
      for (int j = half; j < d; ++j) {
        if (shared(i, j) == 0.0) pool.emplace_back(i, j);
      }
    }
  }
  return pool;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::I: return "I";
    case ModelId::II: return "II";
    case ModelId::III: return "III";
  }
  return "?";
}

ModelId parse_model(const std::string& text) {
  if (text == "I" || text == "1") return ModelId::I;
  if (text == "II" || text == "2") return ModelId::II;
  if (text == "III" || text == "3") return ModelId::III;
  throw ConfigError("unknown model '" + text + "' (expected I, II or III)");
}

GroundTruth gen_model(ModelId model, int d, int num_sources, std::span<const int> h,
                      std::uint64_t seed) {
  if (d < 2) throw ConfigError("models need d >= 2");
  if (num_sources < 0) throw ConfigError("number of sources must be nonnegative");
  const auto studies = static_cast<std::size_t>(num_sources) + 1;
  std::vector<int> hs;
  if (h.size() == 1) {
    hs.assign(studies, h[0]);
  } else if (h.size() == studies) {
    hs.assign(h.begin(), h.end());
  } else {
    throw ConfigError("h needs one value or K+1 values, got " + std::to_string(h.size()));
  }
  for (const int v : hs) {
    if (v < 0) throw ConfigError("h must be nonnegative");
  }

  Rng rng(seed);
  GroundTruth truth;
  truth.model_id = model;
  truth.h_per_study = hs;
  truth.seed = seed;
  switch (model) {
    case ModelId::I: truth.shared = banded(d, 1); break;
    case ModelId::II: truth.shared = banded(d, 5); break;
    case ModelId::III: truth.shared = erdos_renyi(d, rng); break;
  }

  const std::vector<Position> pool = candidate_positions(model, d, truth.shared);
  boost::random::uniform_real_distribution<double> weight(-kUniqueWeight, kUniqueWeight);
  for (std::size_t k = 0; k < studies; ++k) {
    // Both model families end up with ceil(h/2) symmetric pairs.
    const auto pairs = static_cast<std::size_t>((hs[k] + 1) / 2);
    if (pairs > pool.size()) {
      throw ConfigError("h = " + std::to_string(hs[k]) + " needs " + std::to_string(pairs) +
                        " positions but only " + std::to_string(pool.size()) + " are available");
    }
    Matrix gamma = Matrix::Zero(d, d);
    for (const auto& [i, j] : sample_without_replacement(pool, pairs, rng)) {
      const double w = weight(rng);
      gamma(i, j) = w;
      gamma(j, i) = w;
    }
    truth.uniques.push_back(std::move(gamma));
  }

  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& g : truth.uniques) lowest = std::min(lowest, min_eigenvalue(truth.shared + g));
  truth.sigma_offset = std::max(0.0, kMinEigen - lowest);
  for (const auto& g : truth.uniques) {
    truth.precisions.push_back(truth.shared + g +
                               truth.sigma_offset * Matrix::Identity(d, d));
  }
  return truth;
}

StudyData sample_gaussian(const Matrix& omega, Eigen::Index n, std::uint64_t seed,
                          int study_id) {
  if (n < 1) throw DimensionError("sample count must be positive");
  if (max_abs_asymmetry(omega) > 1e-10 * std::max(1.0, max_abs(omega))) {
    throw NumericError("precision matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw NumericError("precision matrix is not positive definite");
  const Eigen::Index d = omega.rows();

  Rng rng(seed);
  boost::random::normal_distribution<double> normal;
  Matrix z(d, n);  // column i is observation i
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j, i) = normal(rng);
  }
  // omega = L L^T, so x = L^{-T} z has covariance inv(omega).
  const Matrix x = llt.matrixU().solve(z);
  return StudyData{x.transpose(), study_id};
}

double frob_error(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw DimensionError("frob_error needs matrices of equal shape");
  }
  return (estimate - truth).norm();
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::TransGlasso: return "trans-glasso";
    case Estimator::TransGlassoCv: return "trans-glasso-cv";
    case Estimator::GlassoTarget: return "glasso-target";
    case Estimator::GlassoPooled: return "glasso-pooled";
  }
  return "?";
}

Estimator parse_estimator(const std::string& text) {
  for (const auto e : {Estimator::TransGlasso, Estimator::TransGlassoCv, Estimator::GlassoTarget,
                       Estimator::GlassoPooled}) {
    if (to_string(e) == text) return e;
  }
  throw ConfigError("unknown estimator '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (d < 2 || num_sources < 0 || n0 < 2 || n_source < 2 || repetitions < 1) {
    throw ConfigError("experiment needs d >= 2, K >= 0, n0, n_source >= 2, repetitions >= 1");
  }
  if (h.size() != 1 && h.size() != static_cast<std::size_t>(num_sources) + 1) {
    throw ConfigError("h needs one value or K+1 values");
  }
  if (estimators.empty()) throw ConfigError("no estimators configured");
}

std::vector<std::string> preset_names() {
  return {"model1-desk",          "model2-desk",          "model3-desk",
          "model1-mixed-desk",    "model1-unknown-desk",  "model1-paper",
          "model2-paper",         "model3-paper",         "model1-unknown-paper",
          "model2-unknown-paper", "model3-unknown-paper"};
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.design = name;
  const auto all_four = std::vector<Estimator>{Estimator::TransGlassoCv, Estimator::TransGlasso,
                                               Estimator::GlassoTarget, Estimator::GlassoPooled};
  if (name == "model1-desk" || name == "model2-desk" || name == "model3-desk") {
    c.model = parse_model(std::string(1, name[5]));
    c.d = 30;
    c.num_sources = 3;
    c.n0 = 100;
    c.n_source = 300;
    c.h = {10};
    c.repetitions = 10;
  } else if (name == "model1-mixed-desk") {
    c.d = 30;
    c.num_sources = 3;
    c.n0 = 100;
    c.n_source = 300;
    c.h = {6, 6, 60, 60};
    c.repetitions = 10;
  } else if (name == "model1-unknown-desk") {
    c.d = 30;
    c.num_sources = 3;
    c.n0 = 100;
    c.n_source = 300;
    c.h = {6, 60, 60, 60};
    c.repetitions = 10;
    c.estimators = all_four;
  } else if (name == "model1-paper" || name == "model2-paper" || name == "model3-paper") {
    c.model = parse_model(std::string(1, name[5]));
    c.d = 100;
    c.num_sources = 5;
    c.h = {40};
    c.repetitions = 30;
    c.n0 = c.model == ModelId::I ? 300 : c.model == ModelId::II ? 750 : 150;
    c.n_source = c.model == ModelId::II ? 2000 : 1000;
  } else if (name == "model1-unknown-paper" || name == "model2-unknown-paper" ||
             name == "model3-unknown-paper") {
    // Two informative sources out of five.
    c.model = parse_model(std::string(1, name[5]));
    c.d = 100;
    c.num_sources = 5;
    c.repetitions = 30;
    c.estimators = all_four;
    const int small = c.model == ModelId::I ? 20 : c.model == ModelId::II ? 30 : 10;
    const int large = c.model == ModelId::III ? 300 : 600;
    c.h = {small, small, small, large, large, large};
    c.n0 = c.model == ModelId::II ? 750 : 300;
    c.n_source = c.model == ModelId::II ? 2000 : 1000;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<EstimatorSummary> summarize(std::span<const ReportRow> rows,
                                        std::span<const Estimator> estimators) {
  std::vector<EstimatorSummary> out;
  for (const auto e : estimators) {
    EstimatorSummary s;
    s.estimator = to_string(e);
    std::vector<double> values;
    for (const auto& r : rows) {
      if (r.estimator != s.estimator) continue;
      if (r.frob_error) {
        values.push_back(*r.frob_error);
      } else {
        ++s.missing;
      }
    }
    s.count = values.size();
    if (!values.empty()) {
      double sum = 0.0;
      for (const double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
    }
    if (values.size() >= 2) {
      double ss = 0.0;
      for (const double v : values) ss += (v - s.mean) * (v - s.mean);
      const double var = ss / static_cast<double>(values.size() - 1);
      s.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.repetitions);
  const std::size_t n_est = config.estimators.size();
  std::vector<std::vector<std::optional<double>>> errors(reps,
                                                         std::vector<std::optional<double>>(n_est));

  parallel_for(reps, config.threads, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, rep);
    const GroundTruth truth =
        gen_model(config.model, config.d, config.num_sources, config.h, rep_seed);
    const StudyData target = sample_gaussian(truth.precisions[0], config.n0,
                                             derive_seed(rep_seed, 1), 0);
    std::vector<StudyData> sources;
    for (int k = 1; k <= config.num_sources; ++k) {
      sources.push_back(sample_gaussian(truth.precisions[k], config.n_source,
                                        derive_seed(rep_seed, 1 + static_cast<std::uint64_t>(k)),
                                        k));
    }
    PipelineConfig pc = config.pipeline;
    pc.center = false;
    pc.threads = 1;
    pc.seed = derive_seed(rep_seed, 1000);
    const ProblemInstance problem = build_problem(target, sources, false);

    for (std::size_t e = 0; e < n_est; ++e) {
      try {
        Matrix omega;
        switch (config.estimators[e]) {
          case Estimator::TransGlasso: omega = fit_trans_glasso(problem, pc).omega0; break;
          case Estimator::TransGlassoCv: omega = trans_glasso_cv(target, sources, pc).omega0; break;
          case Estimator::GlassoTarget:
            omega = glasso_target(problem, std::nullopt, pc.admm, pc.omega_zero_tol).omega;
            break;
          case Estimator::GlassoPooled:
            omega = glasso_pooled(problem, std::nullopt, pc.admm, pc.omega_zero_tol).omega;
            break;
        }
        errors[rep][e] = frob_error(omega, truth.precisions[0]);
      } catch (const Error&) {
        errors[rep][e] = std::nullopt;
      }
    }
  });

  ExperimentReport report;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (std::size_t e = 0; e < n_est; ++e) {
      report.rows.push_back(ReportRow{to_string(config.model), config.design,
                                      static_cast<int>(rep), to_string(config.estimators[e]),
                                      errors[rep][e]});
    }
  }
  report.summary = summarize(report.rows, config.estimators);
  return report;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "model,design,rep,estimator,frob_error\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.design << ',' << r.rep << ',' << r.estimator << ',';
    if (r.frob_error) os << format_double(*r.frob_error);
    os << '\n';
  }
  return os.str();
}

std::string ExperimentReport::summary_json() const {
  nlohmann::ordered_json j;
  if (!rows.empty()) {
    j["model"] = rows.front().model;
    j["design"] = rows.front().design;
  }
  nlohmann::ordered_json est = nlohmann::ordered_json::object();
  for (const auto& s : summary) {
    nlohmann::ordered_json e;
    e["mean"] = s.count > 0 ? nlohmann::ordered_json(s.mean) : nlohmann::ordered_json(nullptr);
    e["stderr"] = s.stderr_ ? nlohmann::ordered_json(*s.stderr_) : nlohmann::ordered_json(nullptr);
    e["count"] = s.count;
    e["missing"] = s.missing;
    est[s.estimator] = std::move(e);
  }
  j["estimators"] = std::move(est);
  return j.dump(2) + "\n";
}

}  // namespace transglasso
