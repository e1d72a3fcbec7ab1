#include "ckn/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace ckn {

double eta_cdf(double x, double rho, double df) {
  if (x <= -rho) return 0.0;
  if (x >= rho) return 1.0;
  return student_t_cdf(x * std::sqrt(df) / std::sqrt(rho * rho - x * x), df);
}

double eta_quantile(double p, double rho, double df) {
  if (p <= 0.0) return -rho;
  if (p >= 1.0) return rho;
  double t = student_t_quantile(p, df);
  return rho * t / std::sqrt(df + t * t);
}

InstanceContext make_context(const ProblemInstance& inst, const CknConfig& cfg) {
  InstanceContext ctx;
  ctx.inst = &inst;
  ctx.cfg = cfg;
  ctx.ens = build_knockoffs(inst);
  if (!ctx.ens.sigma_tilde2)
    throw DimensionError("cknockoff: needs n >= 2m+1 for sigma_tilde");
  ctx.sigma_tilde = std::sqrt(std::max(*ctx.ens.sigma_tilde2, 0.0));

  ctx.gram = inst.X.transpose() * inst.X;
  ctx.gram_llt.compute(ctx.gram);
  ctx.siginv = ctx.gram_llt.solve(Mat::Identity(inst.m(), inst.m()));
  ctx.gram_plus = ctx.ens.X_plus.transpose() * ctx.ens.X_plus;
  ctx.gram_plus_cod.compute(ctx.gram_plus);
  ctx.gram_plus_pinv = ctx.gram_plus_cod.pseudoInverse();
  ctx.M = ctx.ens.X_plus.transpose() * ctx.ens.V_res;
  ctx.xplus_t_y = ctx.ens.X_plus.transpose() * inst.y;
  ctx.y_sqnorm = inst.y.squaredNorm();

  ctx.ols = ols_fit_gram(ctx.gram_llt, ctx.xplus_t_y.head(inst.m()),
                         ctx.y_sqnorm, inst.n(), inst.m());
  ctx.rss_full = ctx.ols.sigma_hat2 * static_cast<double>(inst.n() - inst.m());

  Vec warm;
  ZEval ev = evaluate_response(ctx, ctx.xplus_t_y, ctx.y_sqnorm, &warm);
  ctx.stat.kind = cfg.stat;
  ctx.stat.W = ev.W;
  ctx.ss = ev.ss;
  ctx.bud = ev.bud;
  return ctx;
}

ZEval evaluate_response(const InstanceContext& ctx, const Vec& xplus_t_z,
                        double z_sqnorm, Vec* warm, bool with_ols) {
  const Index n = ctx.n(), m = ctx.m();
  ZEval ev;
  Vec pinv_beta = ctx.gram_plus_pinv.selfadjointView<Eigen::Lower>() * xplus_t_z;
  double rss = std::max(z_sqnorm - xplus_t_z.dot(pinv_beta), 0.0);
  ev.sigma_tilde2 = rss / static_cast<double>(n - 2 * m);
  double st = std::sqrt(ev.sigma_tilde2);
  // guard the measure-zero z-in-span case so lambda stays positive
  st = std::max(st, 1e-12 * std::sqrt(std::max(z_sqnorm, 1.0)));

  FeatureStatistics stat =
      compute_stat(ctx.cfg.stat, ctx.gram_plus, xplus_t_z, st, ctx.cfg.path_L, warm);
  ev.W = std::move(stat.W);
  ev.ss = knockoff_reject(ev.W, ctx.alpha());
  ev.bud = budgets(ev.W, ctx.alpha(), &ev.ss);
  if (with_ols)
    ev.ols = ols_fit_gram(ctx.gram_llt, xplus_t_z.head(m), z_sqnorm, n, m);
  return ev;
}

namespace {

// Lasso of a response on X_{-j}, Gram-side; returns beta over m-1 coords.
struct MinusFit {
  Vec beta;
  double xj_yhat = 0.0;  // X_j^T X_{-j} beta
};

MinusFit lasso_minus_j(const InstanceContext& ctx, Index j, const Vec& xtz,
                       double lambda) {
  const Index m = ctx.m();
  Mat G(m - 1, m - 1);
  Vec g(m - 1), xj_row(m - 1);
  Index a = 0;
  for (Index r = 0; r < m; ++r) {
    if (r == j) continue;
    g(a) = xtz(r);
    xj_row(a) = ctx.gram(j, r);
    Index b = 0;
    for (Index c = 0; c < m; ++c) {
      if (c == j) continue;
      G(a, b++) = ctx.gram(r, c);
    }
    ++a;
  }
  MinusFit fit;
  if (m == 1) {
    fit.beta = Vec();
    return fit;
  }
  LassoFit lf = lasso_fit_gram(G, g, lambda);
  fit.beta = lf.beta;
  fit.xj_yhat = xj_row.dot(lf.beta);
  return fit;
}

}  // namespace

FallbackStatistic fallback_gram(const InstanceContext& ctx, Index j,
                                const Vec& xtz, double z_sqnorm) {
  const Index n = ctx.n(), m = ctx.m();
  // RSS_{-j} = RSS_full(z) + beta_hat_j(z)^2 / siginv_jj
  Vec beta = ctx.gram_llt.solve(xtz);
  double rss_full = std::max(z_sqnorm - xtz.dot(beta), 0.0);
  double rho2 = rss_full + beta(j) * beta(j) / ctx.siginv(j, j);
  FallbackStatistic fb;
  fb.rho = std::sqrt(std::max(rho2, 0.0));
  fb.lambda_j = 2.0 * std::sqrt(rho2 / static_cast<double>(n - m + 1));
  fb.lambda_j = std::max(fb.lambda_j, 1e-300);
  MinusFit mf = lasso_minus_j(ctx, j, xtz, fb.lambda_j);
  fb.xj_yhat = mf.xj_yhat;
  fb.value = std::abs(xtz(j) - fb.xj_yhat);
  return fb;
}

FallbackStatistic fallback_statistic(const ProblemInstance& inst,
                                     const HypothesisDecomposition& dec) {
  const Index n = inst.n(), m = inst.m();
  const Index j = dec.j;
  FallbackStatistic fb;
  fb.rho = dec.rho;
  fb.lambda_j = 2.0 * std::sqrt(null_sigma_hat(dec, n, m));
  fb.lambda_j = std::max(fb.lambda_j, 1e-300);

  Mat Xm(n, m - 1);
  Index k = 0;
  for (Index c = 0; c < m; ++c)
    if (c != j) Xm.col(k++) = inst.X.col(c);
  if (m == 1) {
    fb.yhat_j = Vec::Zero(n);
  } else {
    LassoFit lf = lasso_fit(Xm, inst.y, fb.lambda_j);
    fb.yhat_j = Xm * lf.beta;
  }
  fb.xj_yhat = inst.X.col(j).dot(fb.yhat_j);
  fb.value = std::abs(inst.X.col(j).dot(inst.y) - fb.yhat_j.dot(inst.X.col(j)));
  return fb;
}

HypBasis make_hyp_basis(const InstanceContext& ctx, Index j) {
  HypothesisDecomposition dec = decompose(*ctx.inst, j);
  HypBasis b;
  b.j = j;
  b.V_minus = std::move(dec.V_minus);
  b.v_j = std::move(dec.v_j);
  b.xplus_t_vj = ctx.ens.X_plus.transpose() * b.v_j;
  b.xplus_t_Vminus = ctx.ens.X_plus.transpose() * b.V_minus;
  b.d1 = b.v_j.dot(ctx.inst->X.col(j));
  return b;
}

HypContext make_hyp_context(const InstanceContext& ctx, const HypBasis& basis,
                            const Vec* response) {
  const Vec& y = response ? *response : ctx.inst->y;
  const Index n = ctx.n(), m = ctx.m();
  HypContext h;
  h.basis = &basis;
  h.j = basis.j;
  h.df = static_cast<double>(n - m);
  h.vminus_coef = basis.V_minus.transpose() * y;
  h.eta_y = basis.v_j.dot(y);
  h.z_sqnorm = y.squaredNorm();
  double perp2 = h.z_sqnorm - h.vminus_coef.squaredNorm();
  h.rho = std::sqrt(std::max(perp2, 0.0));
  h.xplus_t_projy = basis.xplus_t_Vminus * h.vminus_coef;
  h.d0 = h.xplus_t_projy(h.j);

  // Fallback statistic via the Gram side of this response.
  Vec xtz(m);
  for (Index c = 0; c < m; ++c) xtz(c) = ctx.inst->X.col(c).dot(y);
  h.fb = fallback_gram(ctx, h.j, xtz, h.z_sqnorm);

  auto [a1, a2] = omega_plus_bounds(h);
  h.a1 = a1;
  h.a2 = a2;
  double fa1 = eta_cdf(a1, h.rho, h.df);
  double fa2 = eta_cdf(a2, h.rho, h.df);
  h.b_plus = std::min(std::max(fa1 + 1.0 - fa2, 0.0), 1.0);
  return h;
}

std::pair<double, double> omega_plus_bounds(const HypContext& h) {
  // T_j(z) = |d0 + eta d1 - X_j^T yhat_j|; T_j < c is an open eta-interval.
  double c = h.fb.value;
  double q = h.fb.xj_yhat;
  double d1 = h.basis->d1;
  double a1 = (q - h.d0 - c) / d1;
  double a2 = (q - h.d0 + c) / d1;
  return {a1, a2};
}

Vec sample_sphere(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec u(dim);
  double nrm = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) u(i) = gauss(rng);
    nrm = u.norm();
  } while (nrm < 1e-12);
  return u / nrm;
}

SamplingRegion build_region(const HypContext& h, const Intervals& a_minus) {
  const double rho = h.rho;
  Intervals raw = a_minus;
  // complement of (a1, a2) inside [-rho, rho]
  double lo1 = -rho, hi1 = std::min(h.a1, rho);
  double lo2 = std::max(h.a2, -rho), hi2 = rho;
  if (h.a1 >= h.a2) {
    raw.push_back({-rho, rho});
  } else {
    if (hi1 > lo1) raw.push_back({lo1, hi1});
    if (hi2 > lo2) raw.push_back({lo2, hi2});
  }
  for (auto& iv : raw) {
    iv.first = std::max(iv.first, -rho);
    iv.second = std::min(iv.second, rho);
  }
  raw.erase(std::remove_if(raw.begin(), raw.end(),
                           [](auto& iv) { return iv.second <= iv.first; }),
            raw.end());
  std::sort(raw.begin(), raw.end());
  SamplingRegion region;
  for (auto& iv : raw) {
    if (!region.intervals.empty() && iv.first <= region.intervals.back().second)
      region.intervals.back().second =
          std::max(region.intervals.back().second, iv.second);
    else
      region.intervals.push_back(iv);
  }
  for (auto& iv : region.intervals)
    region.mass += eta_cdf(iv.second, rho, h.df) - eta_cdf(iv.first, rho, h.df);
  return region;
}

double sample_eta(const SamplingRegion& region, const HypContext& h,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double target = unif(rng) * region.mass;
  for (auto& iv : region.intervals) {
    double flo = eta_cdf(iv.first, h.rho, h.df);
    double fhi = eta_cdf(iv.second, h.rho, h.df);
    double w = fhi - flo;
    if (target <= w || &iv == &region.intervals.back()) {
      double p = std::min(flo + std::max(target, 0.0), fhi);
      double eta = eta_quantile(p, h.rho, h.df);
      return std::clamp(eta, iv.first, iv.second);
    }
    target -= w;
  }
  return 0.0;  // unreachable for nonempty regions
}

Vec assemble_z(const InstanceContext& ctx, const HypContext& h, double eta,
               const Vec& u) {
  double s = std::sqrt(std::max(h.rho * h.rho - eta * eta, 0.0));
  return h.basis->V_minus * h.vminus_coef + eta * h.basis->v_j +
         s * (ctx.ens.V_res * u);
}

std::vector<Vec> sample_conditional(const InstanceContext& ctx,
                                    const HypContext& h,
                                    const SamplingRegion& region, int count,
                                    std::mt19937_64& rng) {
  if (region.mass < 1e-14)
    throw DimensionError("sample_conditional: degenerate region");
  std::vector<Vec> out;
  out.reserve(count);
  const Index dim = ctx.n() - ctx.m();
  for (int i = 0; i < count; ++i) {
    double eta = sample_eta(region, h, rng);
    Vec u = sample_sphere(dim, rng);
    out.push_back(assemble_z(ctx, h, eta, u));
  }
  return out;
}

Intervals omega_minus_estimate(const InstanceContext& ctx, const HypContext& h,
                               std::uint64_t seed) {
  const int k = std::max(ctx.cfg.omega_nodes, 8);
  const int fine = std::max(ctx.cfg.refine_grid, 32);
  const double rho = h.rho;
  const Index dim = ctx.n() - ctx.m();
  std::mt19937_64 rng(seed);

  Vec nodes(k), absw(k), wstar(k);
  Vec warm;
  for (int i = 0; i < k; ++i) {
    // midpoint placement: the exact endpoints eta = +-rho put z inside
    // span(X_plus) (sigma_tilde = 0), a degenerate lasso input
    double eta = -rho + 2.0 * rho * (static_cast<double>(i) + 0.5) / k;
    nodes(i) = eta;
    Vec u = sample_sphere(dim, rng);
    double s = std::sqrt(std::max(rho * rho - eta * eta, 0.0));
    Vec xtz = h.xplus_t_projy + eta * h.basis->xplus_t_vj + s * (ctx.M * u);
    ZEval ev = evaluate_response(ctx, xtz, h.z_sqnorm, &warm);
    absw(i) = std::abs(ev.W(h.j));
    wstar(i) = ev.bud.w_star;
  }

  const double bw = 2.0 * rho / k;  // node spacing
  auto loclin = [&](const Vec& yv, double at) {
    // Gaussian-kernel weighted linear fit around `at`.
    double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
    for (int i = 0; i < k; ++i) {
      double d = (nodes(i) - at) / bw;
      double w = std::exp(-0.5 * d * d);
      double x = nodes(i) - at;
      s0 += w;
      s1 += w * x;
      s2 += w * x * x;
      t0 += w * yv(i);
      t1 += w * x * yv(i);
    }
    double det = s0 * s2 - s1 * s1;
    if (std::abs(det) < 1e-30) return t0 / std::max(s0, 1e-30);
    return (s2 * t0 - s1 * t1) / det;  // intercept = prediction at `at`
  };

  Intervals out;
  bool open = false;
  double start = 0.0, prev = 0.0;
  for (int i = 0; i < fine; ++i) {
    double eta = -rho + 2.0 * rho * static_cast<double>(i) / (fine - 1);
    bool in = loclin(absw, eta) >= loclin(wstar, eta);
    if (in && !open) {
      open = true;
      start = eta;
    } else if (!in && open) {
      open = false;
      out.push_back({start, prev});
    }
    prev = eta;
  }
  if (open) out.push_back({start, rho});
  return out;
}

std::pair<double, double> integrand_parts(bool in_rkn, Index rkn_size,
                                          bool t_ge_c, double b_j) {
  double denom = static_cast<double>(rkn_size + (in_rkn ? 0 : 1));
  double fplus = (in_rkn || t_ge_c) ? 1.0 / denom : 0.0;
  return {fplus, b_j};
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Reject: return "reject";
    case Decision::Accept: return "accept";
    case Decision::Inconclusive: return "inconclusive";
  }
  return "?";
}

EmpiricalBernsteinCS::EmpiricalBernsteinCS(double level)
    : log2a_(std::log(2.0 / level)) {}

void EmpiricalBernsteinCS::update(double x) {
  const int t = t_ + 1;
  double mu_prev = (0.5 + sum_x_) / t;
  double sig2_prev = (0.25 + sum_sqdev_) / t;
  double lam = std::min(
      std::sqrt(2.0 * log2a_ / (sig2_prev * t * std::log(t + 1.0))), 0.5);
  double v = 4.0 * (x - mu_prev) * (x - mu_prev);
  double psi = (-std::log1p(-lam) - lam) / 4.0;
  sum_lx_ += lam * x;
  sum_l_ += lam;
  sum_vpsi_ += v * psi;
  sum_x_ += x;
  t_ = t;
  double mu_now = (0.5 + sum_x_) / (t + 1);
  sum_sqdev_ += (x - mu_now) * (x - mu_now);
}

double EmpiricalBernsteinCS::lower() const {
  if (sum_l_ <= 0) return 0.0;
  return std::max(sum_lx_ / sum_l_ - (log2a_ + sum_vpsi_) / sum_l_, 0.0);
}

double EmpiricalBernsteinCS::upper() const {
  if (sum_l_ <= 0) return 1.0;
  return std::min(sum_lx_ / sum_l_ + (log2a_ + sum_vpsi_) / sum_l_, 1.0);
}

OnlineTestState test_Ej_leq_zero(const InstanceContext& ctx, const HypContext& h,
                                 const SamplingRegion& region, double cs_level,
                                 int truncation, std::uint64_t seed) {
  OnlineTestState st;
  st.cs_level = cs_level;
  if (region.mass < 1e-14) {
    st.degenerate = true;
    st.decision = ctx.cfg.degenerate_rejects ? Decision::Reject : Decision::Accept;
    return st;
  }

  const double alpha = ctx.alpha();
  const double mu0 = alpha / (1.0 + alpha);
  const double c = h.fb.value;
  const Index dim = ctx.n() - ctx.m();
  std::mt19937_64 rng(seed);
  EmpiricalBernsteinCS cs(cs_level);
  Vec warm;
  double fsum = 0.0;

  while (st.samples_seen < truncation) {
    int batch = std::min(ctx.cfg.cs_batch, truncation - st.samples_seen);
    for (int i = 0; i < batch; ++i) {
      MCSample s;
      s.eta = sample_eta(region, h, rng);
      s.u = sample_sphere(dim, rng);
      double rad = std::sqrt(std::max(h.rho * h.rho - s.eta * s.eta, 0.0));
      Vec xtz = h.xplus_t_projy + s.eta * h.basis->xplus_t_vj + rad * (ctx.M * s.u);
      ZEval ev = evaluate_response(ctx, xtz, h.z_sqnorm, &warm);

      bool in_rkn = std::binary_search(ev.ss.rejections.begin(),
                                       ev.ss.rejections.end(), h.j);
      s.rkn_empty = ev.ss.rejections.empty();
      double t_val = std::abs(h.d0 + s.eta * h.basis->d1 - h.fb.xj_yhat);
      s.t_ge_c = t_val >= c;
      s.b_j = ev.bud.b(h.j);
      auto [fp, fm] = integrand_parts(
          in_rkn, static_cast<Index>(ev.ss.rejections.size()), s.t_ge_c, s.b_j);
      s.f = fp - fm;
      fsum += s.f;
      cs.update((s.f + alpha) / (1.0 + alpha));
      st.samples.push_back(std::move(s));
      ++st.samples_seen;
    }
    st.cs_lower = cs.lower();
    st.cs_upper = cs.upper();
    if (st.cs_upper < mu0) {
      st.decision = Decision::Reject;
      break;
    }
    if (st.cs_lower > mu0) {
      st.decision = Decision::Accept;
      break;
    }
  }
  st.running_mean = st.samples_seen ? fsum / st.samples_seen : 0.0;
  if (st.decision == Decision::Inconclusive) {
    st.truncated = true;
    st.decision = st.running_mean <= 0.0 ? Decision::Reject : Decision::Accept;
  }
  return st;
}

std::vector<Index> filter_set(const InstanceContext& ctx) {
  return filter_set_core(ctx.stat.W, ctx.ss, ctx.ols.p_values, ctx.alpha());
}

std::vector<Index> filter_set_core(const Vec& W, const SeqStepResult& ss,
                                   const Vec& p_values, double alpha) {
  const Index m = W.size();
  auto sbh = bh_reject(p_values, std::min(4.0 * alpha, 1.0));
  std::vector<bool> in_bh(m, false);
  for (Index j : sbh) in_bh[j] = true;

  std::vector<bool> core(m, false);
  Index q = 0;
  for (Index j = 0; j < m; ++j) {
    core[j] = in_bh[j] && p_values(j) <= alpha / 2.0;
    q += core[j];
  }

  std::vector<double> ord(m);
  for (Index j = 0; j < m; ++j) ord[j] = std::abs(W(j));
  std::sort(ord.begin(), ord.end());
  double w_mq = (m - q >= 1) ? ord[m - q - 1] : 0.0;  // w_0 = 0 convention
  double w_thr = std::min(w_mq, ss.w_hat);

  std::vector<bool> in_rkn(m, false);
  for (Index j : ss.rejections) in_rkn[j] = true;

  std::vector<Index> S;
  for (Index j = 0; j < m; ++j) {
    if (in_rkn[j]) continue;
    if (core[j] || std::abs(W(j)) >= w_thr) S.push_back(j);
  }
  return S;
}

Vec promising_scores(const InstanceContext& ctx) {
  return promising_scores_core(ctx.stat.W, ctx.ss, ctx.ols.p_values, ctx.alpha());
}

Vec promising_scores_core(const Vec& W, const SeqStepResult& ss,
                          const Vec& p_values, double alpha) {
  const Index m = W.size();
  const Vec& p = p_values;

  // BH q-values: q_min(j) = min_{r >= rank_j} m p_(r) / r.
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return p(a) < p(b); });
  Vec qmin(m);
  double run = std::numeric_limits<double>::infinity();
  for (Index r = m; r >= 1; --r) {
    Index j = order[r - 1];
    run = std::min(run, static_cast<double>(m) * p(j) / static_cast<double>(r));
    qmin(j) = run;
  }

  Vec sA(m);
  for (Index j = 0; j < m; ++j)
    sA(j) = std::max(qmin(j) / (4.0 * alpha), 2.0 * p(j) / alpha);

  std::vector<double> sA_sorted(sA.data(), sA.data() + m);
  std::sort(sA_sorted.begin(), sA_sorted.end());

  // descending rank of |W_j|
  std::vector<Index> word(m);
  std::iota(word.begin(), word.end(), Index{0});
  std::sort(word.begin(), word.end(), [&](Index a, Index b) {
    return std::abs(W(a)) > std::abs(W(b));
  });
  std::vector<Index> drank(m);
  for (Index r = 0; r < m; ++r) drank[word[r]] = r + 1;

  std::vector<bool> in_rkn(m, false);
  for (Index j : ss.rejections) in_rkn[j] = true;

  Vec splus(m);
  for (Index j = 0; j < m; ++j) {
    if (in_rkn[j]) {
      splus(j) = std::numeric_limits<double>::infinity();
      continue;
    }
    double sB;
    if (std::abs(W(j)) >= ss.w_hat) {
      sB = 0.0;
    } else {
      Index k = drank[j];
      sB = (k == 1) ? 0.0 : sA_sorted[k - 2];  // (k-1)-th smallest sA
    }
    splus(j) = std::min(sA(j), sB);
  }
  return splus;
}

namespace {

void fill_base_report(const InstanceContext& ctx, RejectionReport& rep) {
  const Index m = ctx.m();
  rep.alpha = ctx.alpha();
  rep.seed = ctx.cfg.seed;
  rep.w_hat = ctx.ss.w_hat;
  rep.tau = ctx.ss.tau;
  rep.w_star = ctx.bud.w_star;
  rep.tau_1 = ctx.bud.tau_1;
  rep.b = ctx.bud.b;
  rep.b0 = ctx.bud.b0;
  rep.W = ctx.stat.W;
  rep.p_values = ctx.ols.p_values;
  rep.per_hypothesis.resize(m);
  for (Index j = 0; j < m; ++j) {
    auto& h = rep.per_hypothesis[j];
    h.index = j;
    h.name = ctx.inst->names.empty() ? "V" + std::to_string(j + 1)
                                     : ctx.inst->names[j];
    h.W = ctx.stat.W(j);
    h.p_value = ctx.ols.p_values(j);
    h.in_knockoff_set = std::binary_search(ctx.ss.rejections.begin(),
                                           ctx.ss.rejections.end(), j);
    FallbackStatistic fb =
        fallback_gram(ctx, j, ctx.xplus_t_y.head(m), ctx.y_sqnorm);
    h.T = fb.value;
  }
}

template <class F>
void parallel_over(Index count, int threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::thread> pool;
  int nt = std::min<Index>(threads, count);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

RejectionReport knockoff_only_report(const ProblemInstance& inst,
                                     const CknConfig& cfg) {
  InstanceContext ctx = make_context(inst, cfg);
  RejectionReport rep;
  rep.method = "knockoff";
  fill_base_report(ctx, rep);
  rep.rejected = ctx.ss.rejections;
  return rep;
}

RejectionReport bh_report(const ProblemInstance& inst, const CknConfig& cfg) {
  RejectionReport rep;
  rep.method = "bh";
  rep.alpha = inst.alpha;
  rep.seed = cfg.seed;
  OlsSummary ols = ols_fit(inst);
  rep.p_values = ols.p_values;
  rep.rejected = bh_reject(ols.p_values, inst.alpha);
  rep.per_hypothesis.resize(inst.m());
  for (Index j = 0; j < inst.m(); ++j) {
    auto& h = rep.per_hypothesis[j];
    h.index = j;
    h.name = inst.names[j];
    h.p_value = ols.p_values(j);
  }
  for (Index j : rep.rejected)
    rep.per_hypothesis[j].fallback_decision = "bh-reject";
  return rep;
}

CalibrationRun run_calibration(const ProblemInstance& inst, const CknConfig& cfg) {
  CalibrationRun run;
  run.ctx = make_context(inst, cfg);
  const InstanceContext& ctx = run.ctx;
  run.filter = filter_set(ctx);
  const Index ns = static_cast<Index>(run.filter.size());
  run.bases.resize(ns);
  run.hyps.resize(ns);
  run.regions.resize(ns);
  run.states.resize(ns);

  const double alpha0 = cfg.alpha0_frac * ctx.alpha();
  const double denom_m = cfg.alpha_c_post_filter
                             ? static_cast<double>(std::max<Index>(ns, 1))
                             : static_cast<double>(ctx.m());
  const double cs_level =
      std::max<double>(static_cast<double>(ctx.ss.rejections.size()), 1.0) *
      alpha0 / denom_m;

  std::vector<std::string> errors(ns);
  parallel_over(ns, cfg.threads, [&](Index i) {
    Index j = run.filter[i];
    try {
      run.bases[i] = make_hyp_basis(ctx, j);
      run.hyps[i] = make_hyp_context(ctx, run.bases[i]);
      Intervals a_minus = omega_minus_estimate(ctx, run.hyps[i],
                                               split_seed(cfg.seed, j, 0xA11CE));
      run.regions[i] = build_region(run.hyps[i], a_minus);
      run.states[i] =
          test_Ej_leq_zero(ctx, run.hyps[i], run.regions[i], cs_level,
                           cfg.mc_truncation, split_seed(cfg.seed, j, 0xB0B));
    } catch (const std::exception& e) {
      // A per-hypothesis numerical failure must not abort the run; the
      // hypothesis simply keeps its knockoff-only decision.
      run.states[i] = OnlineTestState{};
      run.states[i].decision = Decision::Accept;
      errors[i] = e.what();
    }
  });

  RejectionReport& rep = run.report;
  rep.method = "cknockoff";
  fill_base_report(ctx, rep);
  rep.rejected = ctx.ss.rejections;
  for (Index i = 0; i < ns; ++i) {
    Index j = run.filter[i];
    auto& h = rep.per_hypothesis[j];
    const auto& st = run.states[i];
    h.fallback_decision = !errors[i].empty()
                              ? "error: " + errors[i]
                              : st.degenerate ? "degenerate" : to_string(st.decision);
    h.samples_used = st.samples_seen;
    h.truncated = st.truncated;
    h.degenerate = st.degenerate;
    h.T = run.hyps[i].fb.value;
    if (st.decision == Decision::Reject) rep.rejected.push_back(j);
  }
  std::sort(rep.rejected.begin(), rep.rejected.end());
  rep.rejected.erase(std::unique(rep.rejected.begin(), rep.rejected.end()),
                     rep.rejected.end());
  return run;
}

RejectionReport cknockoff_reject(const ProblemInstance& inst,
                                 const CknConfig& cfg) {
  return run_calibration(inst, cfg).report;
}

}  // namespace ckn
