#include <doctest.h>

#include <random>

#include "ckn/lasso.hpp"
#include "ckn/linear_model.hpp"

using namespace ckn;

namespace {

ProblemInstance random_instance(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Mat X(n, m);
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) X(i, j) = gauss(rng);
    y(i) = gauss(rng);
  }
  return make_instance(X, y, 0.1);
}

double kkt_gap(const Mat& gram, const Vec& xty, const LassoFit& fit) {
  Vec g = xty - gram * fit.beta;
  double gap = 0.0;
  for (Index j = 0; j < fit.beta.size(); ++j) {
    if (fit.beta(j) != 0.0)
      gap = std::max(gap, std::abs(g(j) - fit.lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)));
    else
      gap = std::max(gap, std::max(std::abs(g(j)) - fit.lambda, 0.0));
  }
  return gap;
}

}  // namespace

TEST_CASE("orthogonal design reduces to coordinatewise soft-threshold") {
  // Identity Gram: solution is soft_threshold(xty, lambda) exactly.
  Mat gram = Mat::Identity(6, 6);
  Vec xty(6);
  xty << 3.0, -1.5, 0.4, -0.4, 0.0, 2.2;
  double lambda = 0.5;
  LassoFit fit = lasso_fit_gram(gram, xty, lambda);
  Vec expect(6);
  expect << 2.5, -1.0, 0.0, 0.0, 0.0, 1.7;
  CHECK((fit.beta - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("correlated lasso matches frozen external oracle") {
  // Same fixed 12x4 problem as the OLS oracle test.
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
  Vec y(12);
  y << -0.35686002131228112, 0.54611371577020795, -0.93337627401306089,
      -0.16302742174500551, 0.16371233183928915, 0.26774190815792481,
      0.65812830532599598, 0.12577061523280336, 0.2046086637154591,
      0.38084349701984788, -0.48450085162582346, -0.57835232794264724;
  double lambda = 0.4327473368479936;
  LassoFit fit = lasso_fit(X, y, lambda);
  CHECK(fit.beta(0) == doctest::Approx(0.25854440971489584).epsilon(1e-6));
  CHECK(fit.beta(1) == 0.0);
  CHECK(fit.beta(2) == doctest::Approx(-0.78530616242481421).epsilon(1e-6));
  CHECK(fit.beta(3) == 0.0);
  CHECK((fit.residual - (y - X * fit.beta)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("KKT conditions hold on random correlated problems") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    ProblemInstance inst = random_instance(40, 12, seed);
    Mat gram = inst.X.transpose() * inst.X;
    Vec xty = inst.X.transpose() * inst.y;
    double lmax = xty.cwiseAbs().maxCoeff();
    for (double frac : {0.8, 0.3, 0.05}) {
      LassoFit fit = lasso_fit_gram(gram, xty, frac * lmax);
      CHECK(kkt_gap(gram, xty, fit) < 1e-6);
    }
    // lambda >= lambda_max gives the zero solution
    LassoFit z = lasso_fit_gram(gram, xty, lmax * 1.0000001);
    CHECK(z.beta.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("warm starts do not change the solution") {
  ProblemInstance inst = random_instance(35, 10, 9);
  Mat gram = inst.X.transpose() * inst.X;
  Vec xty = inst.X.transpose() * inst.y;
  double lambda = 0.2 * xty.cwiseAbs().maxCoeff();
  LassoFit cold = lasso_fit_gram(gram, xty, lambda);
  Vec warm = Vec::Random(10);
  LassoFit warm_fit = lasso_fit_gram(gram, xty, lambda, &warm);
  CHECK((cold.beta - warm_fit.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("coarse path grid, entry indices and lambda_hat ordering") {
  ProblemInstance inst = random_instance(50, 8, 31);
  Mat gram = inst.X.transpose() * inst.X;
  Vec xty = inst.X.transpose() * inst.y;
  const int L = 20;
  CoarsePath path = coarse_path(gram, xty, 0.4, L);

  double lmax = xty.cwiseAbs().maxCoeff();
  CHECK(path.lambdas.front() == doctest::Approx(lmax).epsilon(1e-12));
  CHECK(path.lambdas.back() == doctest::Approx(std::min(0.8, lmax / 2.0)).epsilon(1e-12));
  // geometric grid: constant ratio
  double ratio = path.lambdas[1] / path.lambdas[0];
  for (int l = 1; l < L; ++l)
    CHECK(path.lambdas[l + 1] / path.lambdas[l] == doctest::Approx(ratio).epsilon(1e-9));
  CHECK(path.lambda_at(L + 1) == 0.0);

  for (Index j = 0; j < 8; ++j) {
    int l = path.entry_index[j];
    CHECK(l >= 0);
    CHECK(l <= L + 1);
    if (l <= L) {
      // active at entry, inactive strictly before
      CHECK(path.betas[l](j) != 0.0);
      if (l > 0) CHECK(path.betas[l - 1](j) == 0.0);
      // lambda_hat lands in (lambda(l*), lambda(l*-1)] up to the iota nudge
      CHECK(path.lambda_hat(j) >= path.lambda_at(l));
      CHECK(path.lambda_hat(j) <= path.lambdas[std::max(l - 1, 0)] + 2.0 * path.iota);
    }
    // rho_j reads |a_j^T r| at the pre-entry grid point and is KKT-bounded
    if (l >= 1 && l <= L) CHECK(path.rho(j) <= path.lambdas[l - 1] + 1e-9);
  }
}

TEST_CASE("near-zero lambda on a singular Gram still terminates") {
  // Duplicate-direction Gram is singular; lambda ~ 0 must not spin forever.
  ProblemInstance inst = random_instance(30, 5, 61);
  Mat X2(30, 10);
  X2 << inst.X, inst.X;
  Mat gram = X2.transpose() * X2;
  Vec xty = X2.transpose() * inst.y;
  LassoFit fit = lasso_fit_gram(gram, xty, 1e-14);
  // objective stationarity: gradient is (near) orthogonal to feasible moves
  Vec g = xty - gram * fit.beta;
  CHECK(g.cwiseAbs().maxCoeff() < 1e-4);
}
