#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "ckn/csv.hpp"
#include "ckn/linear_model.hpp"

using namespace ckn;

namespace {

Mat random_design(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Mat X(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) X(i, j) = gauss(rng);
  return X;
}

// Fixed 12x4 problem with a frozen scikit-style OLS oracle.
Mat oracle_X() {
  Mat X(12, 4);
  X << -0.51327010415360907, 0.33710160368918068, -0.19735096431266497, -0.2105762437575591,
      -0.073953881761412626, -0.13194533746264023, -0.31788507916345704, 0.11792061874482541,
      0.068219511562026297, -0.41552862018708903, 0.58290095123598051, 0.23353880175065717,
      -0.29680567415658216, 0.2525094068028228, -0.099467995764298725, -0.13877389088583802,
      0.20758619862553226, -0.2526303029815653, 0.15337134104552277, 0.38926758116635679,
      0.38137785357412385, -0.02871494009377697, 0.23267058146943478, -0.70343384182621282,
      -0.10094391848974371, 0.14658159644472582, -0.31201958931018142, -0.14637003530195988,
      0.51248770763896989, 0.65401647340467772, 0.20222785469082524, 0.18294249256710993,
      -0.36183289228013077, -0.24156758613660984, -0.32867435912483506, 0.079087743538500649,
      0.19556308966429134, -0.11272957619404801, -0.28415467008626516, -0.023646542153197194,
      0.052531232123619771, 0.010801836634326222, 0.32166867436713598, -0.15044876778965627,
      -0.070959122347084846, -0.21789455392000398, 0.046713254952803082, 0.37049208394697342;
  return X;
}

Vec oracle_y() {
  Vec y(12);
  y << -0.35686002131228112, 0.54611371577020795, -0.93337627401306089,
      -0.16302742174500551, 0.16371233183928915, 0.26774190815792481,
      0.65812830532599598, 0.12577061523280336, 0.2046086637154591,
      0.38084349701984788, -0.48450085162582346, -0.57835232794264724;
  return y;
}

}  // namespace

TEST_CASE("make_instance standardizes columns and validates") {
  Mat X = 3.7 * random_design(30, 5, 1);
  Vec y = Vec::Ones(30);
  ProblemInstance inst = make_instance(X, y, 0.1);
  for (Index j = 0; j < 5; ++j)
    CHECK(inst.X.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));

  Mat bad = random_design(30, 3, 2);
  bad.col(2) = bad.col(0);  // rank deficient
  CHECK_THROWS_AS(make_instance(bad, y, 0.1), DegenerateDesignError);
  CHECK_THROWS_AS(make_instance(random_design(30, 5, 3), y, 0.0), DimensionError);
  CHECK_THROWS_AS(make_instance(random_design(30, 5, 3), y, 1.0), DimensionError);
  CHECK_THROWS_AS(make_instance(random_design(9, 5, 3), Vec::Ones(9), 0.1),
                  DimensionError);  // n < 2m
}

TEST_CASE("decompose yields orthonormal split around column j") {
  ProblemInstance inst =
      make_instance(random_design(25, 6, 7), random_design(25, 1, 8), 0.1);
  for (Index j : {Index{0}, Index{3}, Index{5}}) {
    HypothesisDecomposition dec = decompose(inst, j);
    // V_minus spans X_{-j} and is orthonormal
    Mat VtV = dec.V_minus.transpose() * dec.V_minus;
    CHECK((VtV - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    for (Index c = 0; c < 6; ++c) {
      if (c == j) continue;
      Vec resid = inst.X.col(c) - dec.V_minus * (dec.V_minus.transpose() * inst.X.col(c));
      CHECK(resid.norm() < 1e-10);
    }
    // v_j unit, orthogonal to X_{-j}, positively aligned with X_j
    CHECK(dec.v_j.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((dec.V_minus.transpose() * dec.v_j).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dec.v_j.dot(inst.X.col(j)) > 0.0);
    // V_res orthogonal to the whole design
    CHECK((inst.X.transpose() * dec.V_res).cwiseAbs().maxCoeff() < 1e-10);
    // rho = ||y - proj_{-j} y||
    Vec r = inst.y - dec.proj_y;
    CHECK(dec.rho == doctest::Approx(r.norm()).epsilon(1e-10));
    CHECK((dec.V_minus.transpose() * r).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ols_fit matches frozen external oracle") {
  ProblemInstance inst = make_instance(oracle_X(), oracle_y(), 0.1);
  OlsSummary ols = ols_fit(inst);
  Vec beta_oracle(4), p_oracle(4);
  beta_oracle << 1.1815261313641374, -0.10702047029362838, -1.6958064559142723,
      -0.29208301941780984;
  p_oracle << 0.0019778417968404675, 0.66096068879625358, 0.0002053513423852117,
      0.23942103237915741;
  for (Index j = 0; j < 4; ++j) {
    CHECK(ols.beta_hat(j) == doctest::Approx(beta_oracle(j)).epsilon(1e-9));
    CHECK(ols.p_values(j) == doctest::Approx(p_oracle(j)).epsilon(1e-8));
  }

  // Gram-side path agrees with the design-side path.
  Eigen::LLT<Mat> llt(inst.X.transpose() * inst.X);
  OlsSummary g = ols_fit_gram(llt, inst.X.transpose() * inst.y,
                              inst.y.squaredNorm(), inst.n(), inst.m());
  CHECK((g.p_values - ols.p_values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("student t cdf and quantile match frozen oracle") {
  CHECK(student_t_cdf(1.3, 7.0) == doctest::Approx(0.8826160823038114).epsilon(1e-12));
  CHECK(student_t_cdf(-0.4, 3.0) == doctest::Approx(0.35796757698718507).epsilon(1e-12));
  CHECK(student_t_cdf(2.5, 40.0) == doctest::Approx(0.9916898235845104).epsilon(1e-12));
  CHECK(student_t_cdf(0.0, 5.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(student_t_quantile(0.975, 10.0) == doctest::Approx(2.2281388519649385).epsilon(1e-9));
  CHECK(student_t_quantile(0.3, 4.0) == doctest::Approx(-0.5686490630385523).epsilon(1e-9));
}

TEST_CASE("bh_reject hand oracle") {
  Vec p(4);
  p << 0.01, 0.2, 0.02, 0.03;
  auto rej = bh_reject(p, 0.1);
  CHECK(rej == std::vector<Index>{0, 2, 3});
  p << 0.5, 0.6, 0.7, 0.8;
  CHECK(bh_reject(p, 0.1).empty());
  // step-up: a large p-value rescues everything below it
  Vec q(4);
  q << 0.09, 0.09, 0.09, 0.09;
  CHECK(bh_reject(q, 0.1).size() == 4);
}

TEST_CASE("csv roundtrip and missing-value rejection") {
  const std::string dir = "/tmp/ckn_csv_test";
  std::remove((dir + ".csv").c_str());
  Mat M = random_design(5, 3, 42);
  write_csv(dir + ".csv", M, {"a", "b", "c"});
  CsvTable t = read_csv(dir + ".csv");
  CHECK(t.names == std::vector<std::string>{"a", "b", "c"});
  CHECK((t.values - M).cwiseAbs().maxCoeff() < 1e-15);

  {
    std::ofstream f(dir + "_bad.csv");
    f << "a,b\n1.0,\n2.0,3.0\n";
  }
  CHECK_THROWS(read_csv(dir + "_bad.csv"));
  {
    std::ofstream f(dir + "_nan.csv");
    f << "a,b\n1.0,xyz\n";
  }
  CHECK_THROWS(read_csv(dir + "_nan.csv"));
}
