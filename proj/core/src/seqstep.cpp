#include "ckn/seqstep.hpp"

#include <algorithm>
#include <cmath>

namespace ckn {

namespace {

std::vector<double> order_stats(const Vec& W) {
  std::vector<double> w(W.size());
  for (Index j = 0; j < W.size(); ++j) w[j] = std::abs(W(j));
  std::sort(w.begin(), w.end());
  return w;
}

inline Index count_C(const Vec& W, double w) {
  Index c = 0;
  for (Index j = 0; j < W.size(); ++j) c += W(j) >= w;
  return c;
}

inline Index count_A(const Vec& W, double w) {
  Index a = 0;
  for (Index j = 0; j < W.size(); ++j) a += W(j) <= -w;
  return a;
}

// Sorted signed values enable O(log m) C/A counts along the threshold sweep.
struct SortedW {
  std::vector<double> vals;  // ascending W_j
  explicit SortedW(const Vec& W) : vals(W.data(), W.data() + W.size()) {
    std::sort(vals.begin(), vals.end());
  }
  Index C(double w) const {  // #{W_j >= w}
    return static_cast<Index>(vals.end() -
                              std::lower_bound(vals.begin(), vals.end(), w));
  }
  Index A(double w) const {  // #{W_j <= -w}
    return static_cast<Index>(std::upper_bound(vals.begin(), vals.end(), -w) -
                              vals.begin());
  }
};

}  // namespace

double fdp_hat(const Vec& W, double w) {
  if (std::isinf(w)) return 0.0;
  Index c = count_C(W, w);
  if (c == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(1 + count_A(W, w)) / static_cast<double>(c);
}

SeqStepResult knockoff_reject(const Vec& W, double alpha) {
  const Index m = W.size();
  auto w = order_stats(W);
  SortedW sw(W);
  SeqStepResult res;
  res.fdp_hat_trace.reserve(m + 1);
  res.tau = m + 1;
  for (Index t = 0; t < m; ++t) {
    Index c = sw.C(w[t]);
    double f = c == 0 ? std::numeric_limits<double>::infinity()
                      : static_cast<double>(1 + sw.A(w[t])) / static_cast<double>(c);
    res.fdp_hat_trace.push_back(f);
    if (res.tau == m + 1 && f <= alpha) {
      res.tau = t + 1;
      res.w_hat = w[t];
    }
  }
  res.fdp_hat_trace.push_back(0.0);  // w_{m+1} = inf
  if (res.tau <= m) {
    for (Index j = 0; j < m; ++j)
      if (W(j) >= res.w_hat) res.rejections.push_back(j);
  }
  return res;
}

BudgetResult budgets(const Vec& W, double alpha, const SeqStepResult* precomputed) {
  const Index m = W.size();
  auto w = order_stats(W);
  SortedW sw(W);
  SeqStepResult ss = precomputed ? *precomputed : knockoff_reject(W, alpha);

  BudgetResult res;
  res.w_hat = ss.w_hat;
  res.tau = ss.tau;

  // Early stop: first t with |C(w_t)| <= ceil(1/alpha) - 1, in exact integer
  // arithmetic to dodge the 1/alpha-integral boundary.
  const Index cap = static_cast<Index>(std::ceil(1.0 / alpha)) - 1;
  Index t_stop = m + 1;
  for (Index t = 0; t < m; ++t) {
    if (sw.C(w[t]) <= cap) {
      t_stop = t + 1;
      break;
    }
  }
  res.tau_1 = std::min(ss.tau, t_stop);
  res.w_star = res.tau_1 <= m ? w[res.tau_1 - 1]
                              : std::numeric_limits<double>::infinity();

  auto budget_at = [&](double thr) {
    Vec b = Vec::Zero(m);
    if (std::isinf(thr)) return b;
    double denom = 1.0 + static_cast<double>(count_A(W, thr));
    for (Index j = 0; j < m; ++j)
      if (W(j) >= thr) b(j) = alpha / denom;
    return b;
  };
  res.b = budget_at(res.w_star);
  res.b0 = budget_at(res.w_hat);
  return res;
}

std::vector<double> supermartingale_trace(const Vec& W,
                                          const std::vector<bool>& null_mask) {
  const Index m = W.size();
  auto w = order_stats(W);
  std::vector<double> trace;
  trace.reserve(m + 1);
  for (Index t = 0; t <= m; ++t) {
    double thr = t < m ? w[t] : std::numeric_limits<double>::infinity();
    Index c0 = 0, a0 = 0;
    if (!std::isinf(thr)) {
      for (Index j = 0; j < m; ++j) {
        if (!null_mask[j]) continue;
        c0 += W(j) >= thr;
        a0 += W(j) <= -thr;
      }
    }
    trace.push_back(static_cast<double>(c0) / (1.0 + static_cast<double>(a0)));
  }
  return trace;
}

}  // namespace ckn
