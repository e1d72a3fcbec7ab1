#include "ckn/knockoffs.hpp"

namespace ckn {

KnockoffEnsemble build_knockoffs(const ProblemInstance& inst, const Vec* user_D) {
  const Index n = inst.n(), m = inst.m();
  if (n < 2 * m) throw DimensionError("build_knockoffs: n < 2m");

  Mat sigma = inst.X.transpose() * inst.X;
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0)
    throw DegenerateDesignError("build_knockoffs: Gram not positive definite");

  KnockoffEnsemble ens;
  if (user_D) {
    if (user_D->size() != m) throw DimensionError("build_knockoffs: bad D length");
    ens.D = *user_D;
  } else {
    double s = std::min(1.0, 2.0 * es.eigenvalues()(0));
    ens.D = Vec::Constant(m, s);
  }
  if ((ens.D.array() < 0).any() || (ens.D.array() > 2).any())
    throw DegenerateDesignError("build_knockoffs: D entries outside [0, 2]");

  // 2*diag(D) - diag(D) Sigma^{-1} diag(D) must be PSD for Eq-style validity.
  Mat siginv = es.eigenvectors() *
               es.eigenvalues().cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
  Mat B = 2.0 * Mat(ens.D.asDiagonal()) -
          ens.D.asDiagonal() * siginv * Mat(ens.D.asDiagonal());
  Eigen::SelfAdjointEigenSolver<Mat> esb(B);
  if (esb.eigenvalues()(0) < -1e-10)
    throw DegenerateDesignError("build_knockoffs: 2D - D Sigma^{-1} D not PSD");

  // Orthonormal complement of span(X); its first m columns host the knockoff
  // perturbation, the rest stay free for the augmented residual space.
  Eigen::HouseholderQR<Mat> qr(inst.X);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  ens.V_res = Q.rightCols(n - m);

  // Pivoted Cholesky handles the PSD-but-singular boundary case exactly at
  // the equicorrelated limit 2*lambda_min.
  Eigen::LDLT<Mat> ldlt(B);
  Mat C;
  {
    Vec d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Mat L = ldlt.matrixL();
    Mat Ct = L * d.asDiagonal();                // B = P^T Ct Ct^T P
    C = (ldlt.transpositionsP().transpose() * Ct).transpose();  // C^T C = B
  }
  ens.X_tilde = inst.X * (Mat::Identity(m, m) - siginv * Mat(ens.D.asDiagonal())) +
                ens.V_res.leftCols(m) * C;

  ens.X_plus.resize(n, 2 * m);
  ens.X_plus << inst.X, ens.X_tilde;
  if (n >= 2 * m + 1) ens.sigma_tilde2 = residual_variance(ens, inst.y);
  return ens;
}

double residual_variance(const KnockoffEnsemble& ens, const Vec& y) {
  const Index n = ens.X_plus.rows();
  const Index m2 = ens.X_plus.cols();
  if (n < m2 + 1)
    throw DimensionError("residual_variance: needs n >= 2m+1");
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(ens.X_plus);
  Vec fitted = ens.X_plus * cod.solve(y);
  return (y - fitted).squaredNorm() / static_cast<double>(n - m2);
}

}  // namespace ckn
