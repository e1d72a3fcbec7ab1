#include "ckn/scenarios.hpp"

#include "ckn/star.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

namespace ckn {

DesignKind design_from_string(const std::string& s) {
  if (s == "iid-normal") return DesignKind::IidNormal;
  if (s == "mcc") return DesignKind::Mcc;
  if (s == "mcc-block") return DesignKind::MccBlock;
  if (s == "coef-ar") return DesignKind::CoefAr;
  if (s == "x-ar") return DesignKind::XAr;
  throw DimensionError("unknown scenario design: " + s);
}

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::IidNormal: return "iid-normal";
    case DesignKind::Mcc: return "mcc";
    case DesignKind::MccBlock: return "mcc-block";
    case DesignKind::CoefAr: return "coef-ar";
    case DesignKind::XAr: return "x-ar";
  }
  return "?";
}

Mat mcc_design(int K, int G, int r) {
  if (K < 1 || G < 1 || r < 1) throw DimensionError("mcc_design: bad K/G/r");
  const Index N = static_cast<Index>(r) * (G + 1);  // observations per block
  Mat onehot = Mat::Zero(N, G);
  for (int g = 0; g < G; ++g)
    for (int i = 0; i < r; ++i) onehot(static_cast<Index>(r) * (g + 1) + i, g) = 1.0;

  // Orthonormal basis of the complement of 1 compresses each block to N-1 rows
  // while preserving the centered Gram r (I - J/(G+1)).
  Vec ones = Vec::Ones(N);
  Eigen::HouseholderQR<Mat> qr(ones);
  Mat Q = qr.householderQ() * Mat::Identity(N, N);
  Mat centered = onehot.rowwise() - onehot.colwise().mean();
  Mat block = Q.rightCols(N - 1).transpose() * centered;  // (N-1) x G

  Mat X = Mat::Zero(static_cast<Index>(K) * (N - 1), static_cast<Index>(K) * G);
  for (int k = 0; k < K; ++k)
    X.block(static_cast<Index>(k) * (N - 1), static_cast<Index>(k) * G, N - 1, G) =
        block;
  return X;
}

namespace {

Mat design_matrix(const Scenario& sc, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (sc.design) {
    case DesignKind::IidNormal: {
      Mat X(sc.n, sc.m);
      for (Index i = 0; i < sc.n; ++i)
        for (Index j = 0; j < sc.m; ++j) X(i, j) = gauss(rng);
      return X;
    }
    case DesignKind::Mcc:
      return mcc_design(1, static_cast<int>(sc.m), sc.r);
    case DesignKind::MccBlock:
      return mcc_design(sc.K, sc.G, sc.r);
    case DesignKind::XAr: {
      Mat X(sc.n, sc.m);
      const double phi = 0.5, s = std::sqrt(1.0 - phi * phi);
      for (Index i = 0; i < sc.n; ++i) {
        X(i, 0) = gauss(rng);
        for (Index j = 1; j < sc.m; ++j) X(i, j) = phi * X(i, j - 1) + s * gauss(rng);
      }
      return X;
    }
    case DesignKind::CoefAr: {
      // X^T X = Psi^{-1} so cov(beta_hat) is AR(1) with correlation 0.5.
      Mat psi(sc.m, sc.m);
      for (Index a = 0; a < sc.m; ++a)
        for (Index b = 0; b < sc.m; ++b)
          psi(a, b) = std::pow(0.5, std::abs(static_cast<double>(a - b)));
      Mat psi_inv = psi.llt().solve(Mat::Identity(sc.m, sc.m));
      Mat A = Mat(psi_inv.llt().matrixL()).transpose();  // A^T A = Psi^{-1}
      Mat Gmat(sc.n, sc.m);
      for (Index i = 0; i < sc.n; ++i)
        for (Index j = 0; j < sc.m; ++j) Gmat(i, j) = gauss(rng);
      Mat U = Eigen::HouseholderQR<Mat>(Gmat).householderQ() *
              Mat::Identity(sc.n, sc.m);
      return U * A;
    }
  }
  throw DimensionError("design_matrix: bad kind");
}

}  // namespace

GeneratedTrial generate(const Scenario& sc, std::uint64_t trial_index) {
  std::mt19937_64 rng(split_seed(sc.seed, trial_index, 0x6E6E));
  Mat X = design_matrix(sc, rng);
  const Index n = X.rows(), m = X.cols();
  if (sc.m1 > m) throw DimensionError("generate: m1 > m");

  // standardize first so beta applies to the unit-norm columns
  for (Index j = 0; j < m; ++j) {
    double nrm = X.col(j).norm();
    if (nrm < 1e-300) throw DegenerateDesignError("generate: zero column");
    X.col(j) /= nrm;
  }

  std::vector<Index> perm(m);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<bool> null_mask(m, true);
  Vec beta = Vec::Zero(m);
  for (Index k = 0; k < sc.m1; ++k) {
    null_mask[perm[k]] = false;
    beta(perm[k]) = sc.beta_star;
  }

  Vec eps(n);
  if (sc.noise == NoiseKind::Gaussian) {
    std::normal_distribution<double> gauss(0.0, sc.sigma);
    for (Index i = 0; i < n; ++i) eps(i) = gauss(rng);
  } else {
    std::student_t_distribution<double> tdist(sc.t_df);
    for (Index i = 0; i < n; ++i) eps(i) = tdist(rng);
  }
  Vec y = X * beta + eps;

  GeneratedTrial out{make_instance(std::move(X), std::move(y), sc.alpha), {}, sc.m1};
  out.null_mask = std::move(null_mask);
  return out;
}

double calibrate_signal(Scenario sc, double target_tpr, double comparator_alpha,
                        int pilot_trials, double tol) {
  if (!(target_tpr > 0 && target_tpr < 1))
    throw DimensionError("calibrate_signal: target outside (0,1)");
  auto tpr_at = [&](double beta) {
    Scenario s = sc;
    s.beta_star = beta;
    s.alpha = comparator_alpha;
    s.seed = split_seed(sc.seed, 0xCA1B);
    double sum = 0;
    for (int t = 0; t < pilot_trials; ++t) {
      GeneratedTrial g = generate(s, t);
      OlsSummary ols = ols_fit(g.inst);
      auto rej = bh_reject(ols.p_values, comparator_alpha);
      Index tp = 0;
      for (Index j : rej) tp += !g.null_mask[j];
      sum += static_cast<double>(tp) / std::max<Index>(g.m1, 1);
    }
    return sum / pilot_trials;
  };

  double lo = 0.0, hi = 1.0;
  double t_hi = tpr_at(hi);
  int expand = 0;
  while (t_hi < target_tpr && expand++ < 16) {
    lo = hi;
    hi *= 2.0;
    t_hi = tpr_at(hi);
  }
  if (t_hi < target_tpr)
    throw ConvergenceError("calibrate_signal: bracket expansion failed",
                           t_hi - target_tpr);
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    double t_mid = tpr_at(mid);
    if (std::abs(t_mid - target_tpr) < tol) return mid;
    (t_mid < target_tpr ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TrialAggregate run_trials(const Scenario& sc, const std::vector<Method>& methods,
                          int trials, const CknConfig& cfg, int threads) {
  if (methods.empty()) throw DimensionError("run_trials: no methods");
  TrialAggregate agg;
  agg.trials = trials;
  agg.methods.resize(methods.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    agg.methods[k].method = to_string(methods[k]);
    agg.methods[k].fdp.assign(trials, 0.0);
    agg.methods[k].tpp.assign(trials, 0.0);
  }
  std::vector<double> b_null(trials, 0.0), b0_null(trials, 0.0);
  std::vector<std::vector<double>> runtime(methods.size(),
                                           std::vector<double>(trials, 0.0));
  std::vector<std::vector<int>> failed(methods.size(),
                                       std::vector<int>(trials, 0));
  std::atomic<long> violations{0};

  auto one_trial = [&](int t) {
    GeneratedTrial g = generate(sc, t);
    CknConfig c = cfg;
    c.seed = split_seed(cfg.seed, t, 0x7121);
    std::vector<std::vector<Index>> rej(methods.size());
    bool have_b = false;
    // cknockoff and cknockoff-star share one calibration pass per trial
    std::optional<CalibrationRun> shared;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      auto t0 = std::chrono::steady_clock::now();
      try {
        RejectionReport rep;
        if (methods[k] == Method::CKnockoff || methods[k] == Method::CKnockoffStar) {
          if (!shared) shared.emplace(run_calibration(g.inst, c));
          rep = methods[k] == Method::CKnockoff ? shared->report
                                                : star_refine(*shared);
        } else {
          rep = run_method(g.inst, methods[k], c);
        }
        rej[k] = rep.rejected;
        if (!have_b && rep.b.size() == g.inst.m()) {
          for (Index j = 0; j < g.inst.m(); ++j) {
            if (g.null_mask[j]) {
              b_null[t] += rep.b(j);
              b0_null[t] += rep.b0(j);
            }
          }
          have_b = true;
        }
        Index v = 0, tp = 0;
        for (Index j : rep.rejected) (g.null_mask[j] ? v : tp) += 1;
        Index R = static_cast<Index>(rep.rejected.size());
        agg.methods[k].fdp[t] = R ? static_cast<double>(v) / R : 0.0;
        agg.methods[k].tpp[t] =
            g.m1 ? static_cast<double>(tp) / g.m1 : 0.0;
      } catch (const std::exception&) {
        failed[k][t] = 1;
      }
      runtime[k][t] = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    }
    // sandwich R^Kn ⊆ R^cKn ⊆ R^cKn* across whichever of the three ran
    auto find = [&](Method mm) -> const std::vector<Index>* {
      for (std::size_t k = 0; k < methods.size(); ++k)
        if (methods[k] == mm && !failed[k][t]) return &rej[k];
      return nullptr;
    };
    auto subset = [](const std::vector<Index>& a, const std::vector<Index>& b) {
      return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    const auto* rkn = find(Method::Knockoff);
    const auto* rck = find(Method::CKnockoff);
    const auto* rst = find(Method::CKnockoffStar);
    if (rkn && rck && !subset(*rkn, *rck)) violations.fetch_add(1);
    if (rck && rst && !subset(*rck, *rst)) violations.fetch_add(1);
    if (rkn && rst && !subset(*rkn, *rst)) violations.fetch_add(1);
  };

  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) one_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
        one_trial(t);
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k < methods.size(); ++k) {
    auto& mk = agg.methods[k];
    int ok = 0;
    double fsum = 0, tsum = 0;
    for (int t = 0; t < trials; ++t) {
      if (failed[k][t]) {
        ++mk.failures;
        continue;
      }
      fsum += mk.fdp[t];
      tsum += mk.tpp[t];
      mk.runtime_sec += runtime[k][t];
      ++ok;
    }
    if (ok > 0) {
      mk.fdr = fsum / ok;
      mk.tpr = tsum / ok;
      double fv = 0, tv = 0;
      for (int t = 0; t < trials; ++t) {
        if (failed[k][t]) continue;
        fv += (mk.fdp[t] - mk.fdr) * (mk.fdp[t] - mk.fdr);
        tv += (mk.tpp[t] - mk.tpr) * (mk.tpp[t] - mk.tpr);
      }
      if (ok > 1) {
        mk.fdr_se = std::sqrt(fv / (ok - 1) / ok);
        mk.tpr_se = std::sqrt(tv / (ok - 1) / ok);
      }
    }
  }
  agg.sandwich_violations = violations.load();
  agg.mean_b_null_sum =
      std::accumulate(b_null.begin(), b_null.end(), 0.0) / trials;
  agg.mean_b0_null_sum =
      std::accumulate(b0_null.begin(), b0_null.end(), 0.0) / trials;
  return agg;
}

ProblemInstance hiv_preprocess(const CsvTable& raw, const std::string& drug_col,
                               double alpha) {
  Index drug = -1;
  for (Index c = 0; c < static_cast<Index>(raw.names.size()); ++c)
    if (raw.names[c] == drug_col) drug = c;
  if (drug < 0)
    throw DimensionError("hiv_preprocess: drug column '" + drug_col +
                         "' not found");
  const Index n = raw.values.rows();
  Vec y = raw.values.col(drug);

  std::vector<Index> keep;
  for (Index c = 0; c < raw.values.cols(); ++c) {
    if (c == drug) continue;
    Index ones = 0;
    for (Index i = 0; i < n; ++i) {
      double v = raw.values(i, c);
      if (v != 0.0 && v != 1.0)
        throw DimensionError("hiv_preprocess: non-binary mutation column " +
                             raw.names[c]);
      ones += v == 1.0;
    }
    if (ones >= 3) keep.push_back(c);
  }
  // dedupe exact duplicates keeping the first occurrence
  std::vector<Index> uniq;
  for (Index c : keep) {
    bool dup = false;
    for (Index u : uniq)
      if (raw.values.col(c) == raw.values.col(u)) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(c);
  }
  if (uniq.empty())
    throw DegenerateDesignError("hiv_preprocess: no mutation columns survive");

  Mat X(n, static_cast<Index>(uniq.size()));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < uniq.size(); ++k) {
    X.col(static_cast<Index>(k)) = raw.values.col(uniq[k]);
    names.push_back(raw.names[uniq[k]]);
  }
  return make_instance(std::move(X), std::move(y), alpha, std::move(names));
}

}  // namespace ckn
