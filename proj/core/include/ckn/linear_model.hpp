#pragma once

#include <optional>
#include <vector>

#include "ckn/types.hpp"

namespace ckn {

/// A Gaussian linear-model testing problem. Columns of X are standardized to
/// unit norm on construction; the response is taken as-is (callers pre-center).
struct ProblemInstance {
  Mat X;               // n x m, unit-norm columns, full column rank
  Vec y;               // length n
  double alpha = 0.1;  // nominal FDR level, in (0,1)
  std::vector<std::string> names;  // optional column names (empty -> V1..Vm)

  Index n() const { return X.rows(); }
  Index m() const { return X.cols(); }
};

/// Standardizes columns in place and validates rank/dimensions.
/// Throws DegenerateDesignError / DimensionError on violation.
ProblemInstance make_instance(Mat X, Vec y, double alpha,
                              std::vector<std::string> names = {});

/// Validates an already-standardized instance (unit columns, rank, alpha).
void validate_instance(const ProblemInstance& inst);

/// Orthogonal decomposition of the design around column j (1-based j is NOT
/// used anywhere in this codebase; j is a 0-based column index).
struct HypothesisDecomposition {
  Index j = 0;
  Mat V_minus;   // n x (m-1), orthonormal basis of span(X_{-j})
  Vec v_j;       // unit vector along the part of X_j orthogonal to X_{-j}
  Mat V_res;     // n x (n-m), orthonormal basis orthogonal to span(X)
  double rho = 0.0;      // ||y - proj_{-j} y||
  Vec x_minus_t_y;       // X_{-j}^T y  (first half of the sufficient statistic)
  double y_sqnorm = 0.0; // ||y||^2    (second half)
  Vec proj_y;            // proj of y onto span(X_{-j}), length n
};

HypothesisDecomposition decompose(const ProblemInstance& inst, Index j);

struct OlsSummary {
  Vec beta_hat;
  double sigma_hat2 = 0.0;  // RSS / (n - m)
  Vec t_stats;
  Vec p_values;  // two-sided, t distribution with n-m df
};

OlsSummary ols_fit(const ProblemInstance& inst);

/// OLS p-values for an alternative response z on the same design, computed
/// from X^T z and ||z||^2 only. `gram_chol` is the Cholesky of X^T X.
OlsSummary ols_fit_gram(const Eigen::LLT<Mat>& gram_chol, const Vec& xtz,
                        double z_sqnorm, Index n, Index m);

/// sigma^2 estimated under H_j: rho^2 / (n - m + 1).
double null_sigma_hat(const HypothesisDecomposition& dec, Index n, Index m);

/// Benjamini-Hochberg step-up at level alpha; returns rejected indices (sorted).
std::vector<Index> bh_reject(const Vec& p_values, double alpha);

/// Student-t CDF / quantile with df degrees of freedom.
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);

}  // namespace ckn
