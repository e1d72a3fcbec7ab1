#include "ckn/star.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace ckn {

namespace {

double star_gate(double alpha, Index m) {
  double cap = std::ceil(1.0 / alpha - 1.0);
  return std::min(alpha / static_cast<double>(m), 0.01 * alpha / cap);
}

std::vector<Index> candidates_core(const Vec& scores, const Vec& p_values,
                                   const std::vector<Index>& filter,
                                   double alpha, Index m, int k_cand) {
  double gate = star_gate(alpha, m);
  std::vector<Index> gated;
  for (Index j : filter)
    if (p_values(j) <= gate && std::isfinite(scores(j))) gated.push_back(j);
  std::sort(gated.begin(), gated.end(), [&](Index a, Index b) {
    if (scores(a) != scores(b)) return scores(a) < scores(b);
    return a < b;
  });
  if (static_cast<int>(gated.size()) > k_cand) gated.resize(k_cand);
  std::sort(gated.begin(), gated.end());
  return gated;
}

class BasisCache {
 public:
  explicit BasisCache(const InstanceContext& ctx) : ctx_(&ctx) {}
  void preload(const std::vector<HypBasis>& bases) {
    for (const auto& b : bases) cache_.emplace(b.j, b);
  }
  const HypBasis& get(Index j) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(j);
    if (it == cache_.end())
      it = cache_.emplace(j, make_hyp_basis(*ctx_, j)).first;
    return it->second;
  }

 private:
  const InstanceContext* ctx_;
  std::map<Index, HypBasis> cache_;
  std::mutex mu_;
};

bool membership_impl(const InstanceContext& ctx, const HypContext& h,
                     std::uint64_t seed) {
  const double alpha = ctx.alpha();
  const double cap = std::ceil(1.0 / alpha - 1.0);
  if (h.b_plus < 1e-300) return false;
  const double h_step = h.b_plus / (alpha / cap);

  const double pa1 = eta_cdf(h.a1, h.rho, h.df);
  const double pa2 = eta_cdf(h.a2, h.rho, h.df);
  const double p0 = eta_cdf(h.eta_y, h.rho, h.df);
  // march into (a1, a2) from whichever boundary the observed eta sits on
  const double dir =
      std::abs(h.eta_y - h.a1) <= std::abs(h.eta_y - h.a2) ? 1.0 : -1.0;

  std::mt19937_64 rng(seed);
  const Index dim = ctx.n() - ctx.m();
  Vec warm;
  double partial = 0.0;
  for (int i = 1; i <= ctx.cfg.k_step; ++i) {
    double pi = p0 + dir * static_cast<double>(i) * h_step;
    if (pi <= pa1 || pi >= pa2) return false;  // node exhausted
    double eta = eta_quantile(pi, h.rho, h.df);
    Vec u = sample_sphere(dim, rng);
    double rad = std::sqrt(std::max(h.rho * h.rho - eta * eta, 0.0));
    Vec xtz = h.xplus_t_projy + eta * h.basis->xplus_t_vj + rad * (ctx.M * u);
    ZEval ev = evaluate_response(ctx, xtz, h.z_sqnorm, &warm);
    bool in_rkn = std::binary_search(ev.ss.rejections.begin(),
                                     ev.ss.rejections.end(), h.j);
    double t_val = std::abs(h.d0 + eta * h.basis->d1 - h.fb.xj_yhat);
    auto [fp, fm] =
        integrand_parts(in_rkn, static_cast<Index>(ev.ss.rejections.size()),
                        t_val >= h.fb.value, ev.bud.b(h.j));
    partial += (fp - fm) * h_step;
    if (partial <= -h.b_plus) return true;
  }
  return false;
}

std::vector<Index> rstar_set_cached(const InstanceContext& ctx, BasisCache& cache,
                                    const Vec& z, std::uint64_t seed) {
  Vec xtz_plus = ctx.ens.X_plus.transpose() * z;
  double z2 = z.squaredNorm();
  Vec warm;
  ZEval ev = evaluate_response(ctx, xtz_plus, z2, &warm, /*with_ols=*/true);

  std::vector<Index> out = ev.ss.rejections;
  auto S = filter_set_core(ev.W, ev.ss, ev.ols.p_values, ctx.alpha());
  Vec scores = promising_scores_core(ev.W, ev.ss, ev.ols.p_values, ctx.alpha());
  auto cands = candidates_core(scores, ev.ols.p_values, S, ctx.alpha(), ctx.m(),
                               ctx.cfg.k_cand);
  for (Index j : cands) {
    const HypBasis& basis = cache.get(j);
    HypContext h = make_hyp_context(ctx, basis, &z);
    if (membership_impl(ctx, h, split_seed(seed, j, 0x57A2)))
      out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<Index> star_candidate_set(const InstanceContext& ctx,
                                      const Vec& scores, const Vec& p_values,
                                      const std::vector<Index>& filter) {
  return candidates_core(scores, p_values, filter, ctx.alpha(), ctx.m(),
                         ctx.cfg.k_cand);
}

bool rstar_membership(const InstanceContext& ctx, const HypBasis& basis,
                      const Vec* response, std::uint64_t seed) {
  HypContext h = make_hyp_context(ctx, basis, response);
  return membership_impl(ctx, h, seed);
}

std::vector<Index> rstar_set(const InstanceContext& ctx, const Vec& z,
                             std::uint64_t seed) {
  BasisCache cache(ctx);
  return rstar_set_cached(ctx, cache, z, seed);
}

RejectionReport star_refine(CalibrationRun& run) {
  const InstanceContext& ctx = run.ctx;
  RejectionReport rep = run.report;
  rep.method = "cknockoff-star";

  BasisCache cache(ctx);
  cache.preload(run.bases);

  const int dcap = ctx.cfg.k_cand + 1;
  for (std::size_t i = 0; i < run.filter.size(); ++i) {
    const Index j = run.filter[i];
    const OnlineTestState& st = run.states[i];
    if (st.decision == Decision::Reject) continue;
    std::vector<std::size_t> ibar;
    for (std::size_t s = 0; s < st.samples.size(); ++s)
      if (st.samples[s].rkn_empty && st.samples[s].t_ge_c) ibar.push_back(s);
    if (ibar.empty()) continue;

    const double total0 = st.running_mean * st.samples_seen;
    const double nI = static_cast<double>(ibar.size());
    if (total0 >= nI || total0 <= 0.0) continue;
    // smallest integer denominator that could flip the sign
    int d_min = static_cast<int>(std::ceil(nI / (nI - total0) - 1e-12));
    d_min = std::max(d_min, 2);
    if (d_min > dcap) continue;

    double total = total0;
    const std::size_t probe = std::min<std::size_t>(3, ibar.size());
    std::size_t small_count = 0, evals = 0;
    bool trimmed = false;
    for (std::size_t s : ibar) {
      const MCSample& smp = st.samples[s];
      Vec z = assemble_z(ctx, run.hyps[i], smp.eta, smp.u);
      auto rs = rstar_set_cached(
          ctx, cache, z, split_seed(ctx.cfg.seed, j, 0xDEED + s));
      Index denom = static_cast<Index>(rs.size());
      if (!std::binary_search(rs.begin(), rs.end(), j)) denom += 1;
      denom = std::min<Index>(denom, dcap);
      total -= 1.0 - 1.0 / static_cast<double>(denom);
      ++evals;
      if (denom < d_min) ++small_count;
      if (total <= 0.0) break;
      if (evals == probe && small_count == probe) {
        trimmed = true;  // remaining samples keep denominator 1
        break;
      }
    }
    (void)trimmed;
    if (total <= 0.0) {
      rep.rejected.push_back(j);
      auto& hrep = rep.per_hypothesis[j];
      hrep.star_reject = true;
      hrep.unverified_numerics = true;
      hrep.fallback_decision = "star-reject";
    }
  }
  std::sort(rep.rejected.begin(), rep.rejected.end());
  rep.rejected.erase(std::unique(rep.rejected.begin(), rep.rejected.end()),
                     rep.rejected.end());
  return rep;
}

RejectionReport cknockoff_star_reject(const ProblemInstance& inst,
                                      const CknConfig& cfg) {
  CalibrationRun run = run_calibration(inst, cfg);
  return star_refine(run);
}

}  // namespace ckn
