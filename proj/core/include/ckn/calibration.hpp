#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ckn/feature_stats.hpp"
#include "ckn/knockoffs.hpp"
#include "ckn/linear_model.hpp"
#include "ckn/seqstep.hpp"
#include "ckn/types.hpp"

namespace ckn {

struct CknConfig {
  StatKind stat = StatKind::LCD_T;
  std::uint64_t seed = 42;
  int mc_truncation = 500;
  double alpha0_frac = 0.1;  // alpha_0 = alpha0_frac * alpha
  int omega_nodes = 16;
  int refine_grid = 512;
  int cs_batch = 8;
  int path_L = 20;
  int threads = 1;
  bool degenerate_rejects = true;   // empty region => E_j = 0 => reject
  bool alpha_c_post_filter = false; // replace m by |S| in alpha_c
  int k_cand = 3;                   // cKnockoff* candidates
  int k_step = 3;                   // cKnockoff* nodes per candidate
};

/// CDF of eta = v_j^T z on [-rho, rho]: F(x) = F_{t,df}(x sqrt(df) / sqrt(rho^2 - x^2)).
double eta_cdf(double x, double rho, double df);
/// Exact inverse via the t-quantile map x = rho t_p / sqrt(df + t_p^2).
double eta_quantile(double p, double rho, double df);

/// Immutable per-instance caches shared by every hypothesis and sample.
struct InstanceContext {
  const ProblemInstance* inst = nullptr;
  CknConfig cfg;
  KnockoffEnsemble ens;
  double sigma_tilde = 0.0;
  Mat gram;        // X^T X
  Eigen::LLT<Mat> gram_llt;
  Mat siginv;      // (X^T X)^{-1}
  Mat gram_plus;   // X_plus^T X_plus
  Eigen::CompleteOrthogonalDecomposition<Mat> gram_plus_cod;
  Mat gram_plus_pinv;  // dense pseudoinverse; one matvec per sample RSS
  Mat M;           // X_plus^T V_res, 2m x (n-m)
  Vec xplus_t_y;
  double y_sqnorm = 0.0;
  double rss_full = 0.0;  // ||y - X beta_hat||^2
  FeatureStatistics stat;
  SeqStepResult ss;
  BudgetResult bud;
  OlsSummary ols;

  Index n() const { return inst->n(); }
  Index m() const { return inst->m(); }
  double alpha() const { return inst->alpha; }
};

InstanceContext make_context(const ProblemInstance& inst, const CknConfig& cfg);

/// The knockoff pipeline applied to a synthetic response, Gram-side only.
struct ZEval {
  Vec W;
  SeqStepResult ss;
  BudgetResult bud;
  double sigma_tilde2 = 0.0;
  OlsSummary ols;  // filled only when with_ols
};
ZEval evaluate_response(const InstanceContext& ctx, const Vec& xplus_t_z,
                        double z_sqnorm, Vec* warm = nullptr,
                        bool with_ols = false);

struct FallbackStatistic {
  double value = 0.0;    // T_j = |X_j^T (y - yhat_j)|
  double lambda_j = 0.0; // 2 * sigma_hat^(j)
  double rho = 0.0;      // ||y - proj_{-j} y||
  double xj_yhat = 0.0;  // X_j^T yhat_j
  Vec yhat_j;            // n-vector; empty in Gram-side computations
};

/// Full (design-side) fallback statistic, for a given decomposition.
FallbackStatistic fallback_statistic(const ProblemInstance& inst,
                                     const HypothesisDecomposition& dec);

/// Gram-side fallback statistic for an arbitrary response summarized by
/// (X^T z, ||z||^2); avoids any n-dimensional work.
FallbackStatistic fallback_gram(const InstanceContext& ctx, Index j,
                                const Vec& xtz, double z_sqnorm);

/// X-dependent part of a hypothesis decomposition (cacheable across responses).
struct HypBasis {
  Index j = -1;
  Mat V_minus;  // n x (m-1)
  Vec v_j;
  Vec xplus_t_vj;       // X_plus^T v_j
  Mat xplus_t_Vminus;   // X_plus^T V_minus, 2m x (m-1)
  double d1 = 0.0;      // v_j^T X_j > 0
};
HypBasis make_hyp_basis(const InstanceContext& ctx, Index j);

/// Per-(hypothesis, response) context for conditional sampling.
struct HypContext {
  const HypBasis* basis = nullptr;
  Index j = -1;
  double df = 0.0;           // n - m
  double rho = 0.0;
  double eta_y = 0.0;        // v_j^T y
  Vec vminus_coef;           // V_minus^T y
  Vec xplus_t_projy;         // X_plus^T proj_{-j} y
  double d0 = 0.0;           // X_j^T proj_{-j} y
  double z_sqnorm = 0.0;     // ||y||^2, invariant across samples
  FallbackStatistic fb;
  double a1 = 0.0, a2 = 0.0; // Omega_plus eta-bounds
  double b_plus = 0.0;       // Q_j(Omega_plus) = F(a1) + 1 - F(a2)
};

/// Builds the response-dependent context for hypothesis j; `response` defaults
/// to the instance's own y.
HypContext make_hyp_context(const InstanceContext& ctx, const HypBasis& basis,
                            const Vec* response = nullptr);

/// {z : T_j(z) >= c} = {eta not in (a1, a2)}; eta(y) lies on the boundary.
std::pair<double, double> omega_plus_bounds(const HypContext& h);

using Intervals = std::vector<std::pair<double, double>>;

/// Node-sampled local-linear estimate of {eta : |W_j| >= w_tau1}.
Intervals omega_minus_estimate(const InstanceContext& ctx, const HypContext& h,
                               std::uint64_t seed);

struct SamplingRegion {
  Intervals intervals;  // disjoint, ascending closed eta-intervals
  double mass = 0.0;    // F_eta mass
};
SamplingRegion build_region(const HypContext& h, const Intervals& a_minus);

/// Draws eta from F_eta restricted to the region (inverse CDF over the
/// region's cumulative mass) and u uniform on the unit sphere in R^{n-m}.
double sample_eta(const SamplingRegion& region, const HypContext& h,
                  std::mt19937_64& rng);
Vec sample_sphere(Index dim, std::mt19937_64& rng);

/// Full z reconstruction (n-vector); used by tests and the star pass.
Vec assemble_z(const InstanceContext& ctx, const HypContext& h, double eta,
               const Vec& u);
std::vector<Vec> sample_conditional(const InstanceContext& ctx,
                                    const HypContext& h,
                                    const SamplingRegion& region, int count,
                                    std::mt19937_64& rng);

/// f_j(z; c) = [1{j in R^Kn(z)} or 1{T_j(z) >= c}] / |R^Kn(z) U {j}| - b_j(z).
/// Returns {f_plus, f_minus}; f = f_plus - f_minus and f_minus >= 0.
std::pair<double, double> integrand_parts(bool in_rkn, Index rkn_size,
                                          bool t_ge_c, double b_j);

/// Anytime-valid empirical-Bernstein confidence sequence for a mean in [0,1].
class EmpiricalBernsteinCS {
 public:
  explicit EmpiricalBernsteinCS(double level);
  void update(double x);
  double lower() const;
  double upper() const;
  int count() const { return t_; }

 private:
  double log2a_;
  double sum_lx_ = 0, sum_l_ = 0, sum_vpsi_ = 0, sum_x_ = 0, sum_sqdev_ = 0;
  int t_ = 0;
};

enum class Decision { Reject, Accept, Inconclusive };
std::string to_string(Decision d);

struct MCSample {
  double eta = 0.0;
  Vec u;
  double f = 0.0;
  bool rkn_empty = false;
  bool t_ge_c = false;
  double b_j = 0.0;
};

struct OnlineTestState {
  int samples_seen = 0;
  double running_mean = 0.0;
  double cs_lower = 0.0, cs_upper = 1.0;
  double cs_level = 0.0;
  Decision decision = Decision::Inconclusive;
  bool truncated = false;
  bool degenerate = false;
  std::vector<MCSample> samples;  // retained for the star pass
};

OnlineTestState test_Ej_leq_zero(const InstanceContext& ctx, const HypContext& h,
                                 const SamplingRegion& region, double cs_level,
                                 int truncation, std::uint64_t seed);

/// S = (S^BH(4a) ∩ {p <= a/2}) ∪ S^Kn \ R^Kn at s = 1.
std::vector<Index> filter_set(const InstanceContext& ctx);
std::vector<Index> filter_set_core(const Vec& W, const SeqStepResult& ss,
                                   const Vec& p_values, double alpha);

/// s+_j = min{s : j in S(s)}; +inf sentinel for j in R^Kn.
Vec promising_scores(const InstanceContext& ctx);
Vec promising_scores_core(const Vec& W, const SeqStepResult& ss,
                          const Vec& p_values, double alpha);

struct HypothesisReport {
  Index index = 0;
  std::string name;
  double W = 0.0;
  double p_value = 1.0;
  double T = 0.0;
  bool in_knockoff_set = false;
  std::string fallback_decision = "not-tested";
  int samples_used = 0;
  bool truncated = false;
  bool degenerate = false;
  bool star_reject = false;
  bool unverified_numerics = false;
};

struct RejectionReport {
  std::string method;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<Index> rejected;  // sorted
  std::vector<HypothesisReport> per_hypothesis;
  // SeqStep diagnostics
  double w_hat = 0.0, w_star = 0.0;
  Index tau = 0, tau_1 = 0;
  Vec b, b0;
  Vec W, p_values;
};

RejectionReport knockoff_only_report(const ProblemInstance& inst,
                                     const CknConfig& cfg);
RejectionReport bh_report(const ProblemInstance& inst, const CknConfig& cfg);
RejectionReport cknockoff_reject(const ProblemInstance& inst,
                                 const CknConfig& cfg);

/// Internal engine shared with the star refinement; runs the standard
/// calibrated pass and keeps per-hypothesis state alive.
struct CalibrationRun {
  InstanceContext ctx;
  std::vector<Index> filter;            // S
  std::vector<HypBasis> bases;          // parallel to filter
  std::vector<HypContext> hyps;         // parallel to filter
  std::vector<SamplingRegion> regions;  // parallel to filter
  std::vector<OnlineTestState> states;  // parallel to filter
  RejectionReport report;
};
CalibrationRun run_calibration(const ProblemInstance& inst, const CknConfig& cfg);

}  // namespace ckn
