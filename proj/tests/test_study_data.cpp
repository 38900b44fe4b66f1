#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "transglasso/study_data.hpp"

using namespace transglasso;

TEST_CASE("load_csv reads plain numeric rows") {
  test::TempDir dir;
  const auto path = dir.write("a.csv", "1,0\n0,1\n");
  const StudyData s = load_csv(path, false);
  CHECK(s.n() == 2);
  CHECK(s.d() == 2);
  CHECK(s.samples.isApprox(Matrix::Identity(2, 2)));
}

TEST_CASE("load_csv skips a header row when asked") {
  test::TempDir dir;
  const auto path = dir.write("h.csv", "a,b\n1,2\n3,4\n");
  const StudyData s = load_csv(path, true);
  Matrix expected(2, 2);
  expected << 1, 2, 3, 4;
  CHECK(s.samples == expected);
}

TEST_CASE("load_csv error paths") {
  test::TempDir dir;

  SUBCASE("ragged rows name the row") {
    const auto path = dir.write("r.csv", "1,2\n3\n");
    try {
      load_csv(path, false);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
    }
  }
  SUBCASE("non-numeric cell names row and column") {
    const auto path = dir.write("n.csv", "1,2\n3,x\n");
    try {
      load_csv(path, false);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == 2);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv(dir.path() / "nope.csv", false), IoError);
  }
  SUBCASE("single data row") {
    const auto path = dir.write("one.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(path, true), DimensionError);
  }
  SUBCASE("non-finite values are rejected") {
    const auto path = dir.write("inf.csv", "1,inf\n0,1\n");
    CHECK_THROWS_AS(load_csv(path, false), ParseError);
  }
}

TEST_CASE("sample_covariance examples") {
  SUBCASE("uncentered identity rows") {
    const StudyData s = make_study(Matrix::Identity(2, 2));
    const CovMatrix c = sample_covariance(s, false);
    CHECK(c.matrix.isApprox(0.5 * Matrix::Identity(2, 2)));
    CHECK(c.n == 2);
  }
  SUBCASE("centered two-point sample") {
    Matrix x(2, 1);
    x << 0, 2;
    const CovMatrix c = sample_covariance(make_study(x), true);
    CHECK(c.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("a single observation is a dimension error") {
    StudyData s{Matrix::Constant(1, 1, 2.0), 0};
    CHECK_THROWS_AS(sample_covariance(s, false), DimensionError);
    CHECK_THROWS_AS(make_study(Matrix::Constant(1, 1, 2.0)), DimensionError);
  }
}

TEST_CASE("sample_covariance matches the brute-force double loop and is PSD") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 7;
    const int d = 1 + trial % 5;
    Matrix x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
    const CovMatrix c = sample_covariance(make_study(x), false);
    for (int j = 0; j < d; ++j) {
      for (int l = 0; l < d; ++l) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += x(i, j) * x(i, l);
        CHECK(std::abs(c.matrix(j, l) - s / n) <= 1e-12);
      }
    }
    CHECK(max_abs_asymmetry(c.matrix) == 0.0);
    const CovMatrix cc = sample_covariance(make_study(x), true);
    const double hi = std::max(1.0, cc.matrix.cwiseAbs().maxCoeff() * d);
    CHECK(min_eigenvalue(cc.matrix) >= -1e-10 * hi);
  }
}

TEST_CASE("build_problem weights") {
  SUBCASE("one source") {
    const StudyData t = make_study(Matrix::Random(100, 3));
    const StudyData s = make_study(Matrix::Random(300, 3), 1);
    const std::vector<StudyData> sources{s};
    const ProblemInstance p = build_problem(t, sources, false);
    CHECK(p.total_n == 400);
    CHECK(p.weights[0] == 0.25);
    CHECK(p.weights[1] == 0.75);
  }
  SUBCASE("target only") {
    const StudyData t = make_study(Matrix::Random(10, 3));
    const ProblemInstance p = build_problem(t, {}, true);
    CHECK(p.weights.size() == 1);
    CHECK(p.weights[0] == 1.0);
    CHECK(p.total_n == 10);
  }
  SUBCASE("dimension mismatch") {
    const StudyData t = make_study(Matrix::Random(10, 3));
    const std::vector<StudyData> sources{make_study(Matrix::Random(10, 4), 1)};
    CHECK_THROWS_AS(build_problem(t, sources, false), DimensionError);
  }
}

TEST_CASE("build_problem weights sum to one for arbitrary sample counts") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(2, 500);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CovMatrix> covs;
    const int k = trial % 6;
    for (int i = 0; i < k; ++i) covs.push_back(CovMatrix{Matrix::Identity(2, 2), count(rng)});
    const ProblemInstance p = build_problem_from_covs(CovMatrix{Matrix::Identity(2, 2), count(rng)}, covs);
    double total = 0.0;
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      total += p.weights[i];
      n += p.cov(i).n;
      CHECK(p.weights[i] == static_cast<double>(p.cov(i).n) / static_cast<double>(p.total_n));
    }
    CHECK(n == p.total_n);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("write_matrix_csv round-trips at double precision") {
  test::TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix m(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = normal(rng) * std::pow(10.0, i - 2);
  write_matrix_csv(dir.path() / "m.csv", m);
  CHECK(load_csv(dir.path() / "m.csv", false).samples == m);
}
