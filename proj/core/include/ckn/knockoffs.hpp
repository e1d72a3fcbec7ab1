#pragma once

#include <optional>

#include "ckn/linear_model.hpp"
#include "ckn/types.hpp"

namespace ckn {

struct KnockoffEnsemble {
  Mat X_tilde;   // n x m
  Vec D;         // length m, entries in [0, 2]
  Mat X_plus;    // n x 2m, [X X_tilde]
  Mat V_res;     // n x (n-m), orthonormal complement of span(X)
  std::optional<double> sigma_tilde2;  // present iff n >= 2m+1
};

/// Fixed-X knockoffs with the equicorrelated rule D_j = min(1, 2*lambda_min).
/// A caller-supplied D vector (validated against 2*Sigma - D PSD) may be
/// injected through `user_D`.
KnockoffEnsemble build_knockoffs(const ProblemInstance& inst,
                                 const Vec* user_D = nullptr);

/// sigma_tilde^2 = ||y - proj_{X_plus} y||^2 / (n - 2m); requires n >= 2m+1.
double residual_variance(const KnockoffEnsemble& ens, const Vec& y);

}  // namespace ckn
