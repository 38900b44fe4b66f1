#include <cmath>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "transglasso/simgen.hpp"

using namespace transglasso;

namespace {

std::size_t nnz_offdiag(const Matrix& m) {
  std::size_t n = 0;
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index l = 0; l < m.cols(); ++l) n += (j != l && m(j, l) != 0.0);
  return n;
}

void check_truth(const GroundTruth& t, int d) {
  const std::size_t m = t.precisions.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Matrix& omega = t.precisions[k];
    CHECK(max_abs_asymmetry(omega) == 0.0);
    CHECK(min_eigenvalue(omega) >= 0.1 - 1e-10);
    const Matrix& gamma = t.uniques[k];
    CHECK(max_abs_asymmetry(gamma) == 0.0);
    const int h = t.h_per_study[k];
    const std::size_t nnz = count_nonzero(gamma, 0.0);
    CHECK(nnz == nnz_offdiag(gamma));
    CHECK(nnz <= static_cast<std::size_t>(h + 1));
    if (t.model_id != ModelId::III) {
      CHECK(nnz == static_cast<std::size_t>(2 * ((h + 1) / 2)));
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index l = 0; l < d; ++l) {
          if (gamma(j, l) == 0.0) continue;
          const Eigen::Index half = d / 2;
          CHECK(((j < half && l >= half) || (l < half && j >= half)));
        }
      }
    }
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      if (gamma(i) != 0.0) CHECK(t.shared(i) == 0.0);
    }
    CHECK((omega - (t.shared + gamma + t.sigma_offset * Matrix::Identity(d, d))).cwiseAbs().maxCoeff() == 0.0);
    if (k > 0) {
      const int bound = 2 * (h + t.h_per_study[0] + 2);
      CHECK(count_nonzero(t.differential(k), 0.0) <= static_cast<std::size_t>(bound));
    }
  }
}

}  // namespace

TEST_CASE("Model I without unique entries is the band matrix") {
  const std::vector<int> h{0};
  const GroundTruth t = gen_model(ModelId::I, 4, 1, h, 7);
  Matrix band(4, 4);
  band << 5, 3, 0, 0, 3, 5, 3, 0, 0, 3, 5, 3, 0, 0, 3, 5;
  CHECK(t.sigma_offset == 0.0);
  CHECK(t.precisions.size() == 2);
  CHECK(t.precisions[0] == band);
  CHECK(t.precisions[1] == band);
}

TEST_CASE("Model II band entries") {
  const std::vector<int> h{0};
  const GroundTruth t = gen_model(ModelId::II, 12, 1, h, 1);
  CHECK(t.shared(0, 5) == doctest::Approx(0.38880).epsilon(1e-12));
  CHECK(t.shared(0, 6) == 0.0);
  CHECK(t.shared(3, 3) == 5.0);
}

TEST_CASE("gen_model is deterministic per seed") {
  const std::vector<int> h{10};
  for (const ModelId m : {ModelId::I, ModelId::II, ModelId::III}) {
    const GroundTruth a = gen_model(m, 30, 3, h, 42);
    const GroundTruth b = gen_model(m, 30, 3, h, 42);
    const GroundTruth c = gen_model(m, 30, 3, h, 43);
    for (std::size_t k = 0; k < 4; ++k) CHECK(a.precisions[k] == b.precisions[k]);
    CHECK(a.sigma_offset == b.sigma_offset);
    bool differs = false;
    for (std::size_t k = 0; k < 4; ++k) differs |= a.uniques[k] != c.uniques[k];
    CHECK(differs);
  }
}

TEST_CASE("generator invariants over many seeds") {
  for (const ModelId m : {ModelId::I, ModelId::II, ModelId::III}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const std::vector<int> h = seed % 2 == 0 ? std::vector<int>{10} : std::vector<int>{3, 7, 0, 25};
      check_truth(gen_model(m, 30, 3, h, seed), 30);
    }
  }
}

TEST_CASE("gen_model configuration errors") {
  const std::vector<int> huge{1000};
  CHECK_THROWS_AS(gen_model(ModelId::I, 10, 1, huge, 1), ConfigError);
  CHECK_THROWS_AS(gen_model(ModelId::III, 10, 1, huge, 1), ConfigError);
  const std::vector<int> wrong_count{1, 2};
  CHECK_THROWS_AS(gen_model(ModelId::I, 10, 3, wrong_count, 1), ConfigError);
  const std::vector<int> h{2};
  CHECK_THROWS_AS(gen_model(ModelId::I, 1, 1, h, 1), ConfigError);
  CHECK(parse_model("II") == ModelId::II);
  CHECK(parse_model("3") == ModelId::III);
  CHECK_THROWS_AS(parse_model("IV"), ConfigError);
}

TEST_CASE("sample_gaussian law of large numbers") {
  SUBCASE("identity precision") {
    const StudyData x = sample_gaussian(Matrix::Identity(3, 3), 100000, 5);
    const Matrix cov = sample_covariance(x, false).matrix;
    CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 0.05);
  }
  SUBCASE("scalar precision") {
    const StudyData x = sample_gaussian(Matrix::Constant(1, 1, 4.0), 100000, 6);
    const double var = sample_covariance(x, true).matrix(0, 0);
    CHECK(std::abs(var - 0.25) <= 0.01);
  }
  SUBCASE("deviation shrinks with n") {
    const std::vector<int> h{4};
    const Matrix omega = gen_model(ModelId::I, 6, 0, h, 2).precisions[0];
    const Matrix sigma = omega.inverse();
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      double prev = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (const Eigen::Index n : {1000, 10000, 100000}) {
        const Matrix cov = sample_covariance(sample_gaussian(omega, n, seed), false).matrix;
        const double dev = (cov - sigma).cwiseAbs().maxCoeff();
        ok = ok && dev <= prev;
        prev = dev;
      }
      monotone += ok;
    }
    CHECK(monotone >= 3);
  }
  SUBCASE("determinism and errors") {
    CHECK(sample_gaussian(Matrix::Identity(2, 2), 10, 3).samples ==
          sample_gaussian(Matrix::Identity(2, 2), 10, 3).samples);
    CHECK(sample_gaussian(Matrix::Identity(2, 2), 10, 3, 4).study_id == 4);
    CHECK_THROWS_AS(sample_gaussian(-Matrix::Identity(2, 2), 10, 3), NumericError);
  }
}

TEST_CASE("frob_error") {
  std::mt19937_64 rng(1);
  const Matrix a = test::random_symmetric(4, rng);
  const Matrix b = test::random_symmetric(4, rng);
  CHECK(frob_error(a, a) == 0.0);
  CHECK(frob_error(Matrix::Identity(2, 2), Matrix::Zero(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a(i) - b(i)) * (a(i) - b(i));
  CHECK(std::abs(frob_error(a, b) - std::sqrt(s)) <= 1e-12);
  CHECK_THROWS_AS(frob_error(a, Matrix::Zero(3, 3)), DimensionError);
}

TEST_CASE("summarize computes mean and standard error") {
  const std::vector<Estimator> est{Estimator::GlassoTarget, Estimator::GlassoPooled};
  std::vector<ReportRow> rows;
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    rows.push_back(ReportRow{"I", "x", static_cast<int>(i), "glasso-target", v[i]});
    rows.push_back(ReportRow{"I", "x", static_cast<int>(i), "glasso-pooled",
                             i == 0 ? std::optional<double>(3.0) : std::nullopt});
  }
  const auto s = summarize(rows, est);
  REQUIRE(s.size() == 2);
  CHECK(s[0].count == 4);
  CHECK(s[0].mean == doctest::Approx(3.5));
  double var = 0.0;
  for (const double x : v) var += (x - 3.5) * (x - 3.5);
  var /= 3.0;
  REQUIRE(s[0].stderr_);
  CHECK(*s[0].stderr_ == doctest::Approx(std::sqrt(var / 4.0)));
  CHECK(s[1].count == 1);
  CHECK(s[1].missing == 3);
  CHECK(s[1].mean == 3.0);
  CHECK_FALSE(s[1].stderr_);
}

TEST_CASE("run_experiment") {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.num_sources = 2;
  cfg.n0 = 40;
  cfg.n_source = 80;
  cfg.h = {4};
  cfg.seed = 11;

  SUBCASE("one repetition of one estimator") {
    cfg.estimators = {Estimator::GlassoTarget};
    const ExperimentReport r = run_experiment(cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].frob_error.has_value());
    CHECK(r.rows[0].estimator == "glasso-target");
    CHECK(r.to_csv().rfind("model,design,rep,estimator,frob_error\n", 0) == 0);
  }
  SUBCASE("deterministic and independent of the thread count") {
    cfg.repetitions = 3;
    cfg.estimators = {Estimator::GlassoTarget, Estimator::GlassoPooled};
    const ExperimentReport a = run_experiment(cfg);
    cfg.threads = 4;
    const ExperimentReport b = run_experiment(cfg);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.summary_json() == b.summary_json());
    CHECK(a.rows.size() == 6);
  }
  SUBCASE("invalid configurations") {
    cfg.repetitions = 0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  }
}

TEST_CASE("presets") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset_config(name);
    CHECK(c.design == name);
    CHECK_NOTHROW(c.validate());
  }
  const ExperimentConfig mixed = preset_config("model1-mixed-desk");
  CHECK(mixed.h == std::vector<int>{6, 6, 60, 60});
  const ExperimentConfig unknown = preset_config("model1-unknown-desk");
  CHECK(unknown.h == std::vector<int>{6, 60, 60, 60});
  CHECK_THROWS_AS(preset_config("no-such-design"), ConfigError);
}
