#pragma once

#include <limits>
#include <vector>

#include "ckn/types.hpp"

namespace ckn {

struct SeqStepResult {
  double w_hat = std::numeric_limits<double>::infinity();
  Index tau = 0;                   // stopping index in 1..m+1
  std::vector<Index> rejections;   // {j : W_j >= w_hat}, sorted
  std::vector<double> fdp_hat_trace;  // FDP-hat at each order statistic, then 0 for w=inf
};

struct BudgetResult {
  double w_star = std::numeric_limits<double>::infinity();
  Index tau_1 = 0;
  Vec b;    // early-stopped budget
  Vec b0;   // un-stopped budget (diagnostic)
  double w_hat = std::numeric_limits<double>::infinity();
  Index tau = 0;
};

/// (1 + #{W_j <= -w}) / #{W_j >= w}; +inf when the denominator is empty.
/// fdp_hat at w = +inf is 0 by convention.
double fdp_hat(const Vec& W, double w);

SeqStepResult knockoff_reject(const Vec& W, double alpha);

/// Pass an already-computed SeqStep result to skip the internal recomputation.
BudgetResult budgets(const Vec& W, double alpha,
                     const SeqStepResult* precomputed = nullptr);

/// M_t = |C(w_t) ∩ H0| / (1 + |A(w_t) ∩ H0|) for t = 1..m+1 (simulation oracle).
std::vector<double> supermartingale_trace(const Vec& W,
                                          const std::vector<bool>& null_mask);

}  // namespace ckn
