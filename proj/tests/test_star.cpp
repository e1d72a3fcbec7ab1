#include <doctest.h>

#include <algorithm>
#include <random>

#include "ckn/pipeline.hpp"
#include "ckn/scenarios.hpp"
#include "ckn/star.hpp"

using namespace ckn;

namespace {

GeneratedTrial small_trial(std::uint64_t trial, double beta = 3.0,
                           double alpha = 0.2) {
  Scenario sc;
  sc.design = DesignKind::IidNormal;
  sc.m = 12;
  sc.n = 40;
  sc.m1 = 3;
  sc.beta_star = beta;
  sc.alpha = alpha;
  sc.seed = 51;
  return generate(sc, trial);
}

bool subset(const std::vector<Index>& a, const std::vector<Index>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("star candidate set honors the p-value gate and k_cand") {
  GeneratedTrial g = small_trial(0);
  CknConfig cfg;
  cfg.k_cand = 2;
  InstanceContext ctx = make_context(g.inst, cfg);
  const Index m = ctx.m();
  // gate = min(alpha/m, 0.01 alpha / ceil(1/alpha - 1)); alpha=0.2, m=12
  const double gate = std::min(0.2 / 12.0, 0.01 * 0.2 / 4.0);

  Vec scores = Vec::LinSpaced(m, 0.1, 1.2);
  Vec p = Vec::Constant(m, 0.5);
  std::vector<Index> filter;
  for (Index j = 0; j < m; ++j) filter.push_back(j);

  CHECK(star_candidate_set(ctx, scores, p, filter).empty());

  p(3) = gate * 0.5;
  p(7) = gate * 0.9;
  p(9) = gate * 0.99;
  auto cands = star_candidate_set(ctx, scores, p, filter);
  // three pass the gate but k_cand = 2 keeps the two smallest scores
  CHECK(cands == std::vector<Index>{3, 7});

  // hypotheses outside the filter are never candidates
  std::vector<Index> narrow = {7, 9};
  CHECK(star_candidate_set(ctx, scores, p, narrow) == std::vector<Index>{7, 9});
}

TEST_CASE("rstar_set contains the knockoff rejections of the response") {
  GeneratedTrial g = small_trial(1, 4.5);
  CknConfig cfg;
  InstanceContext ctx = make_context(g.inst, cfg);
  auto rs = rstar_set(ctx, g.inst.y, 123);
  CHECK(subset(ctx.ss.rejections, rs));
  CHECK(std::is_sorted(rs.begin(), rs.end()));
}

TEST_CASE("sandwich: knockoff ⊆ cknockoff ⊆ cknockoff-star per instance") {
  for (std::uint64_t t : {2, 3, 4, 5}) {
    GeneratedTrial g = small_trial(t, 3.5);
    CknConfig cfg;
    cfg.seed = split_seed(99, t);
    RejectionReport kn = run_method(g.inst, Method::Knockoff, cfg);
    CalibrationRun run = run_calibration(g.inst, cfg);
    RejectionReport ck = run.report;
    RejectionReport st = star_refine(run);
    CHECK(subset(kn.rejected, ck.rejected));
    CHECK(subset(ck.rejected, st.rejected));
    // star-only rejections are flagged as unverified numerics
    for (Index j : st.rejected) {
      bool in_ck = std::binary_search(ck.rejected.begin(), ck.rejected.end(), j);
      if (!in_ck) {
        CHECK(st.per_hypothesis[j].star_reject);
        CHECK(st.per_hypothesis[j].unverified_numerics);
      }
    }
    for (Index j : ck.rejected) CHECK(!st.per_hypothesis[j].star_reject);
  }
}

TEST_CASE("rstar_membership is deterministic in the seed") {
  GeneratedTrial g = small_trial(6, 4.0);
  CknConfig cfg;
  InstanceContext ctx = make_context(g.inst, cfg);
  auto S = filter_set(ctx);
  if (!S.empty()) {
    HypBasis basis = make_hyp_basis(ctx, S.front());
    bool a = rstar_membership(ctx, basis, nullptr, 42);
    bool b = rstar_membership(ctx, basis, nullptr, 42);
    CHECK(a == b);
  }
}
