#include "ckn/lasso.hpp"

#include <cmath>

namespace ckn {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

LassoFit lasso_fit_gram(const Mat& gram, const Vec& xty, double lambda,
                        const Vec* warm_start, double lambda_scale,
                        long max_sweeps) {
  const Index p = gram.cols();
  if (lambda < 0) throw DimensionError("lasso_fit: lambda < 0");
  LassoFit fit;
  fit.lambda = lambda;
  if (warm_start && warm_start->size() == p) {
    fit.beta = *warm_start;
    fit.gradient = xty - gram * fit.beta;
  } else {
    fit.beta = Vec::Zero(p);
    fit.gradient = xty;
  }
  if (lambda_scale <= 0.0) lambda_scale = xty.cwiseAbs().maxCoeff();
  if (lambda_scale <= 0.0) lambda_scale = 1.0;
  const double tol = 1e-8 * lambda_scale;

  // Unit-norm columns make gram(j,j) = 1, so the coordinate minimizer is a
  // direct soft-threshold of gradient + beta_j.
  auto objective = [&] {
    // 0.5 b'Gb - xty'b + lambda|b|_1 with Gb = xty - gradient
    return 0.5 * fit.beta.dot(xty - fit.gradient) - xty.dot(fit.beta) +
           lambda * fit.beta.lpNorm<1>();
  };
  double max_delta = 0.0;
  double best_obj = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    max_delta = 0.0;
    for (Index j = 0; j < p; ++j) {
      double old = fit.beta(j);
      double bj = soft_threshold(fit.gradient(j) + old, lambda);
      double delta = bj - old;
      if (delta != 0.0) {
        fit.beta(j) = bj;
        fit.gradient.noalias() -= delta * gram.col(j);
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    ++fit.iterations;
    if (max_delta < tol) return fit;
    // Singular Grams at near-zero lambda can cycle along null directions
    // without materially moving the objective; accept a sustained plateau.
    double obj = objective();
    if (obj < best_obj - 1e-12 * (1.0 + std::abs(best_obj))) {
      best_obj = obj;
      stall = 0;
    } else if (++stall >= 50) {
      return fit;
    }
  }
  double kkt_gap = 0.0;
  for (Index j = 0; j < p; ++j) {
    double g = fit.gradient(j);
    if (fit.beta(j) != 0.0)
      kkt_gap = std::max(kkt_gap, std::abs(g - lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)));
    else
      kkt_gap = std::max(kkt_gap, std::max(std::abs(g) - lambda, 0.0));
  }
  throw ConvergenceError("lasso_fit: no convergence after " +
                             std::to_string(max_sweeps) + " sweeps",
                         kkt_gap);
}

LassoFit lasso_fit(const Mat& A, const Vec& y, double lambda, const Vec* warm_start) {
  Mat gram = A.transpose() * A;
  Vec xty = A.transpose() * y;
  LassoFit fit = lasso_fit_gram(gram, xty, lambda, warm_start);
  fit.residual = y - A * fit.beta;
  return fit;
}

CoarsePath coarse_path(const Mat& gram, const Vec& xty, double sigma_tilde,
                       int L, double lambda_min_override) {
  const Index p = gram.cols();
  if (L < 1) throw DimensionError("coarse_path: L < 1");
  double lambda_max = xty.cwiseAbs().maxCoeff();
  if (lambda_max <= 0.0) lambda_max = 1.0;  // y orthogonal to all columns
  double lambda_min;
  if (lambda_min_override > 0.0)
    lambda_min = std::min(lambda_min_override, lambda_max / 2.0);
  else if (sigma_tilde > 0.0)
    lambda_min = std::min(2.0 * sigma_tilde, lambda_max / 2.0);
  else
    throw DimensionError("coarse_path: needs sigma_tilde or explicit lambda_min");

  CoarsePath path;
  const double zeta = std::pow(lambda_min / lambda_max, 1.0 / L);
  path.lambdas.resize(L + 1);
  for (int l = 0; l <= L; ++l) path.lambdas[l] = lambda_max * std::pow(zeta, l);
  path.lambdas[L] = lambda_min;  // kill the last rounding wobble
  path.iota = 1e-6 * lambda_max;

  path.betas.resize(L + 1);
  path.gradients.resize(L + 1);
  path.entry_index.assign(p, L + 2);
  Vec warm = Vec::Zero(p);
  for (int l = 0; l <= L; ++l) {
    LassoFit fit = lasso_fit_gram(gram, xty, path.lambdas[l], &warm, lambda_max);
    warm = fit.beta;
    path.betas[l] = fit.beta;
    path.gradients[l] = fit.gradient;
    for (Index j = 0; j < p; ++j)
      if (path.entry_index[j] == L + 2 && fit.beta(j) != 0.0)
        path.entry_index[j] = l;
  }
  for (Index j = 0; j < p; ++j)
    if (path.entry_index[j] == L + 2) path.entry_index[j] = L + 1;

  // rho_j from the last grid point before entry; never-entered columns read
  // their correlation at lambda(L).
  path.rho.resize(p);
  path.lambda_hat.resize(p);
  for (Index j = 0; j < p; ++j) {
    int lstar = path.entry_index[j];
    int before = std::max(std::min(lstar - 1, L), 0);
    double lambda_plus = path.lambdas[before];
    // gradient holds a_j^T r at the pre-entry grid point (j inactive there).
    double rho_j = std::abs(path.gradients[before](j));
    path.rho(j) = rho_j;
    path.lambda_hat(j) = std::max(rho_j - path.iota, path.lambda_at(lstar)) +
                         path.iota * rho_j / lambda_plus;
  }
  return path;
}

}  // namespace ckn
