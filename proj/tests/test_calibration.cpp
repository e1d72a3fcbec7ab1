#include <doctest.h>

#include <random>

#include "ckn/calibration.hpp"

using namespace ckn;

namespace {

ProblemInstance random_instance(Index n, Index m, std::uint64_t seed,
                                double signal = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Mat X(n, m);
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) X(i, j) = gauss(rng);
    y(i) = gauss(rng);
  }
  ProblemInstance inst = make_instance(X, y, 0.2);
  if (signal != 0.0) inst.y += signal * (inst.X.col(0) + inst.X.col(1));
  return inst;
}

}  // namespace

TEST_CASE("eta_cdf / eta_quantile are inverse, monotone and symmetric") {
  const double rho = 2.3, df = 17.0;
  CHECK(eta_cdf(-rho, rho, df) == 0.0);
  CHECK(eta_cdf(rho, rho, df) == 1.0);
  CHECK(eta_cdf(0.0, rho, df) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = -rho;
  for (double p : {0.001, 0.1, 0.25, 0.5, 0.77, 0.95, 0.999}) {
    double x = eta_quantile(p, rho, df);
    CHECK(x > -rho);
    CHECK(x < rho);
    CHECK(eta_cdf(x, rho, df) == doctest::Approx(p).epsilon(1e-9));
    CHECK(eta_cdf(-x, rho, df) == doctest::Approx(1.0 - p).epsilon(1e-9));
    CHECK(x > prev);  // strictly monotone in p
    prev = x;
  }
  CHECK(eta_quantile(0.0, rho, df) == -rho);
  CHECK(eta_quantile(1.0, rho, df) == rho);
}

TEST_CASE("conditional samples satisfy the S_j constraints") {
  ProblemInstance inst = random_instance(40, 8, 99, 1.5);
  CknConfig cfg;
  InstanceContext ctx = make_context(inst, cfg);
  const Index j = 2;
  HypBasis basis = make_hyp_basis(ctx, j);
  HypContext h = make_hyp_context(ctx, basis);

  SamplingRegion full;
  full.intervals = {{-h.rho, h.rho}};
  full.mass = 1.0;
  std::mt19937_64 rng(5);
  auto zs = sample_conditional(ctx, h, full, 25, rng);
  Vec xminus_t_y(7);
  Index a = 0;
  for (Index c = 0; c < 8; ++c)
    if (c != j) xminus_t_y(a++) = inst.X.col(c).dot(inst.y);
  for (const Vec& z : zs) {
    // X_{-j}^T z preserved to 1e-8
    a = 0;
    for (Index c = 0; c < 8; ++c) {
      if (c == j) continue;
      CHECK(std::abs(inst.X.col(c).dot(z) - xminus_t_y(a++)) < 1e-8);
    }
    // ||z||^2 preserved, residual norm equals rho to 1e-10
    CHECK(z.squaredNorm() == doctest::Approx(inst.y.squaredNorm()).epsilon(1e-10));
    Vec resid = z - basis.V_minus * (basis.V_minus.transpose() * z);
    CHECK(resid.norm() == doctest::Approx(h.rho).epsilon(1e-10));

    // T_j(z) is affine in eta with S_j-measurable coefficients
    double eta = basis.v_j.dot(z);
    Vec xtz(8);
    for (Index c = 0; c < 8; ++c) xtz(c) = inst.X.col(c).dot(z);
    FallbackStatistic fb = fallback_gram(ctx, j, xtz, z.squaredNorm());
    double affine = std::abs(h.d0 + eta * basis.d1 - h.fb.xj_yhat);
    CHECK(fb.value == doctest::Approx(affine).epsilon(1e-6));
  }
}

TEST_CASE("omega_plus bounds put eta(y) on the boundary") {
  ProblemInstance inst = random_instance(36, 6, 12, 2.0);
  CknConfig cfg;
  InstanceContext ctx = make_context(inst, cfg);
  for (Index j : {Index{0}, Index{4}}) {
    HypBasis basis = make_hyp_basis(ctx, j);
    HypContext h = make_hyp_context(ctx, basis);
    CHECK(h.a1 < h.a2);  // c > 0 and d1 > 0
    double gap = std::min(std::abs(h.eta_y - h.a1), std::abs(h.eta_y - h.a2));
    CHECK(gap < 1e-8 * std::max(1.0, std::abs(h.eta_y)));
    // b_plus = F(a1) + 1 - F(a2) within [0, 1]
    double expect = eta_cdf(h.a1, h.rho, h.df) + 1.0 - eta_cdf(h.a2, h.rho, h.df);
    CHECK(h.b_plus == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("build_region merges the complement with the estimated Omega-minus") {
  HypContext h;
  h.rho = 1.0;
  h.df = 10.0;
  h.a1 = -0.2;
  h.a2 = 0.3;
  Intervals am = {{-0.9, -0.5}, {-0.6, -0.4}, {0.25, 0.4}};
  SamplingRegion r = build_region(h, am);
  REQUIRE(r.intervals.size() == 2);
  CHECK(r.intervals[0].first == doctest::Approx(-1.0));
  CHECK(r.intervals[0].second == doctest::Approx(-0.2));
  CHECK(r.intervals[1].first == doctest::Approx(0.25));
  CHECK(r.intervals[1].second == doctest::Approx(1.0));
  double mass = eta_cdf(-0.2, 1.0, 10.0) + 1.0 - eta_cdf(0.25, 1.0, 10.0);
  CHECK(r.mass == doctest::Approx(mass).epsilon(1e-12));

  // degenerate bounds mean T >= c everywhere: the whole disc is kept
  h.a1 = 0.5;
  h.a2 = 0.5;
  SamplingRegion whole = build_region(h, {});
  REQUIRE(whole.intervals.size() == 1);
  CHECK(whole.mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sample_eta respects the region") {
  HypContext h;
  h.rho = 1.5;
  h.df = 25.0;
  SamplingRegion r;
  r.intervals = {{-1.2, -0.6}, {0.1, 0.9}};
  for (auto& iv : r.intervals)
    r.mass += eta_cdf(iv.second, h.rho, h.df) - eta_cdf(iv.first, h.rho, h.df);
  std::mt19937_64 rng(7);
  int in_second = 0;
  for (int i = 0; i < 500; ++i) {
    double eta = sample_eta(r, h, rng);
    bool ok = (eta >= -1.2 && eta <= -0.6) || (eta >= 0.1 && eta <= 0.9);
    CHECK(ok);
    in_second += eta > 0.0;
  }
  // eta concentrates near 0 (sd ~ rho/sqrt(df)), so the positive interval
  // dominates but the far-left one still gets occasional draws
  CHECK(in_second > 400);
  CHECK(in_second < 500);
}

TEST_CASE("empirical Bernstein CS frozen stopping oracle") {
  {
    EmpiricalBernsteinCS cs(0.05);
    int stop = 0;
    for (int t = 1; t <= 100; ++t) {
      cs.update(0.95);
      if (cs.lower() > 0.5) {
        stop = t;
        break;
      }
    }
    CHECK(stop == 17);
  }
  {
    EmpiricalBernsteinCS cs(0.05);
    int stop = 0;
    for (int t = 1; t <= 100; ++t) {
      cs.update(0.02);
      if (cs.upper() < 0.5) {
        stop = t;
        break;
      }
    }
    CHECK(stop == 16);
  }
  {
    EmpiricalBernsteinCS cs(0.001);  // stricter level waits longer
    int stop = 0;
    for (int t = 1; t <= 200; ++t) {
      cs.update(0.95);
      if (cs.lower() > 0.5) {
        stop = t;
        break;
      }
    }
    CHECK(stop == 35);
  }
  // bounds are always valid and ordered
  EmpiricalBernsteinCS cs(0.1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    cs.update(unif(rng));
    CHECK(cs.lower() >= 0.0);
    CHECK(cs.upper() <= 1.0);
    CHECK(cs.lower() <= cs.upper());
  }
}

TEST_CASE("integrand_parts hand values") {
  auto [f1, b1] = integrand_parts(true, 3, false, 0.1);
  CHECK(f1 == doctest::Approx(1.0 / 3.0));
  CHECK(b1 == doctest::Approx(0.1));
  auto [f2, b2] = integrand_parts(false, 3, true, 0.05);
  CHECK(f2 == doctest::Approx(0.25));
  CHECK(b2 == doctest::Approx(0.05));
  auto [f3, b3] = integrand_parts(false, 3, false, 0.2);
  CHECK(f3 == 0.0);
  CHECK(b3 == doctest::Approx(0.2));
  auto [f4, b4] = integrand_parts(false, 0, true, 0.0);
  CHECK(f4 == doctest::Approx(1.0));  // R^Kn empty, T >= c: denominator |{j}|
  CHECK(b4 == 0.0);
}

TEST_CASE("filter_set_core and promising_scores_core hand oracle") {
  Vec W(6), p(6);
  W << 10.0, 9.0, 8.0, 1.5, -1.0, -2.0;
  p << 0.001, 0.002, 0.9, 0.01, 0.5, 0.6;
  const double alpha = 0.2;
  SeqStepResult ss = knockoff_reject(W, alpha);
  CHECK(ss.rejections.empty());  // fdp_hat never reaches 0.2

  auto S = filter_set_core(W, ss, p, alpha);
  CHECK(S == std::vector<Index>{0, 1, 2, 3, 5});

  Vec s = promising_scores_core(W, ss, p, alpha);
  CHECK(s(0) == doctest::Approx(0.0));
  CHECK(s(1) == doctest::Approx(0.01));
  CHECK(s(2) == doctest::Approx(0.02));
  CHECK(s(3) == doctest::Approx(0.1));
  CHECK(s(4) == doctest::Approx(5.0));
  CHECK(s(5) == doctest::Approx(0.1));
}

TEST_CASE("promising scores are +inf exactly on the knockoff rejections") {
  ProblemInstance inst = random_instance(60, 10, 404, 4.0);
  CknConfig cfg;
  InstanceContext ctx = make_context(inst, cfg);
  Vec s = promising_scores(ctx);
  std::vector<bool> in_rkn(10, false);
  for (Index j : ctx.ss.rejections) in_rkn[j] = true;
  for (Index j = 0; j < 10; ++j) {
    CHECK(std::isinf(s(j)) == in_rkn[j]);
    if (!in_rkn[j]) CHECK(s(j) >= 0.0);
  }
  // the filter never contains a knockoff rejection
  for (Index j : filter_set(ctx)) CHECK(!in_rkn[j]);
}

TEST_CASE("test_Ej_leq_zero bookkeeping and degenerate handling") {
  ProblemInstance inst = random_instance(40, 8, 314, 1.0);
  CknConfig cfg;
  cfg.mc_truncation = 40;
  InstanceContext ctx = make_context(inst, cfg);
  HypBasis basis = make_hyp_basis(ctx, 1);
  HypContext h = make_hyp_context(ctx, basis);
  SamplingRegion full;
  full.intervals = {{-h.rho, h.rho}};
  full.mass = 1.0;
  OnlineTestState st = test_Ej_leq_zero(ctx, h, full, 0.001, 40, 77);
  CHECK(st.samples_seen <= 40);
  CHECK(st.samples.size() == static_cast<std::size_t>(st.samples_seen));
  CHECK(st.decision != Decision::Inconclusive);
  if (st.truncated)
    CHECK((st.decision == Decision::Reject) == (st.running_mean <= 0.0));
  for (const auto& s : st.samples) {
    CHECK(s.f >= -ctx.alpha() - 1e-12);
    CHECK(s.f <= 1.0 + 1e-12);
    CHECK(std::abs(s.eta) <= h.rho);
  }

  SamplingRegion empty;  // zero mass
  OnlineTestState deg = test_Ej_leq_zero(ctx, h, empty, 0.001, 40, 77);
  CHECK(deg.degenerate);
  CHECK(deg.decision == Decision::Reject);
  CknConfig cfg2 = cfg;
  cfg2.degenerate_rejects = false;
  InstanceContext ctx2 = make_context(inst, cfg2);
  OnlineTestState deg2 = test_Ej_leq_zero(ctx2, h, empty, 0.001, 40, 77);
  CHECK(deg2.decision == Decision::Accept);
}
