#pragma once

#include <vector>

#include "ckn/types.hpp"

namespace ckn {

struct LassoFit {
  double lambda = 0.0;
  Vec beta;
  Vec gradient;   // A^T (y - A beta) = xty - G beta
  Vec residual;   // populated by the design-side entry point only
  long iterations = 0;
};

/// Coordinate descent with covariance updates on a precomputed Gram matrix.
/// Columns of the underlying design must be unit-norm so the coordinate
/// update is a plain soft-threshold. Convergence: max coordinate update
/// below 1e-8 * lambda_scale (default lambda_scale = max|xty|).
LassoFit lasso_fit_gram(const Mat& gram, const Vec& xty, double lambda,
                        const Vec* warm_start = nullptr,
                        double lambda_scale = 0.0, long max_sweeps = 100000);

/// Design-side wrapper; also fills `residual`.
LassoFit lasso_fit(const Mat& A, const Vec& y, double lambda,
                   const Vec* warm_start = nullptr);

struct CoarsePath {
  std::vector<double> lambdas;     // lambda(0) = lambda_max ... lambda(L) = lambda_min
  std::vector<Vec> betas;          // fit at each grid point
  std::vector<Vec> gradients;      // xty - G beta at each grid point
  std::vector<int> entry_index;    // l*_j in 1..L+1 (L+1 = never entered)
  Vec rho;                         // |a_j^T r| at the grid point before entry
  Vec lambda_hat;
  double iota = 0.0;
  double lambda_at(int l) const {  // lambda(L+1) = 0 convention
    return l <= static_cast<int>(lambdas.size()) - 1 ? lambdas[l] : 0.0;
  }
};

/// Geometric grid from lambda_max = max|a_j^T y| down to
/// min(2*sigma_tilde, lambda_max/2), L+1 points. Pass lambda_min explicitly
/// via `lambda_min_override` when sigma_tilde is unavailable.
CoarsePath coarse_path(const Mat& gram, const Vec& xty, double sigma_tilde,
                       int L = 20, double lambda_min_override = 0.0);

}  // namespace ckn
