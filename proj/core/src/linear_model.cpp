#include "ckn/linear_model.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <numeric>

namespace ckn {

double student_t_cdf(double x, double df) {
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, x);
}

double student_t_quantile(double p, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, p);
}

ProblemInstance make_instance(Mat X, Vec y, double alpha,
                              std::vector<std::string> names) {
  if (X.rows() != y.size())
    throw DimensionError("make_instance: X rows != y length");
  for (Index j = 0; j < X.cols(); ++j) {
    double nrm = X.col(j).norm();
    if (nrm < 1e-300)
      throw DegenerateDesignError("make_instance: zero column " + std::to_string(j));
    X.col(j) /= nrm;
  }
  ProblemInstance inst{std::move(X), std::move(y), alpha, std::move(names)};
  if (inst.names.empty()) {
    inst.names.resize(inst.m());
    for (Index j = 0; j < inst.m(); ++j) inst.names[j] = "V" + std::to_string(j + 1);
  }
  validate_instance(inst);
  return inst;
}

void validate_instance(const ProblemInstance& inst) {
  const Index n = inst.n(), m = inst.m();
  if (m < 1) throw DimensionError("instance: m < 1");
  if (n < 2 * m) throw DimensionError("instance: n < 2m");
  if (!(inst.alpha > 0.0 && inst.alpha < 1.0))
    throw DimensionError("instance: alpha outside (0,1)");
  for (Index j = 0; j < m; ++j) {
    if (std::abs(inst.X.col(j).norm() - 1.0) > 1e-8)
      throw DegenerateDesignError("instance: column " + std::to_string(j) +
                                  " not unit norm");
  }
  Eigen::JacobiSVD<Mat> svd(inst.X);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0))
    throw DegenerateDesignError("instance: X numerically rank deficient");
}

HypothesisDecomposition decompose(const ProblemInstance& inst, Index j) {
  const Index n = inst.n(), m = inst.m();
  if (j < 0 || j >= m) throw DimensionError("decompose: j out of range");

  HypothesisDecomposition d;
  d.j = j;

  // Reorder columns so X_j comes last; Householder QR of the first m-1
  // columns then yields V_minus, and column m yields v_j. The trailing
  // n-m columns of Q span the residual space.
  Mat Xord(n, m);
  Index k = 0;
  for (Index c = 0; c < m; ++c)
    if (c != j) Xord.col(k++) = inst.X.col(c);
  Xord.col(m - 1) = inst.X.col(j);

  Eigen::HouseholderQR<Mat> qr(Xord);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  Mat R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Index c = 0; c < m; ++c) {
    if (std::abs(R(c, c)) <= 1e-10) {
      if (c < m - 1)
        throw DegenerateDesignError("decompose: X_{-j} rank deficient");
      throw DegenerateDesignError("decompose: X_j in span of X_{-j}");
    }
    if (R(c, c) < 0) Q.col(c) = -Q.col(c);  // fixed sign convention
  }

  d.V_minus = Q.leftCols(m - 1);
  d.v_j = Q.col(m - 1);
  d.V_res = Q.rightCols(n - m);

  Vec coef = d.V_minus.transpose() * inst.y;
  d.proj_y = d.V_minus * coef;
  Vec perp = inst.y - d.proj_y;
  d.rho = perp.norm();
  d.y_sqnorm = inst.y.squaredNorm();

  d.x_minus_t_y.resize(m - 1);
  k = 0;
  for (Index c = 0; c < m; ++c)
    if (c != j) d.x_minus_t_y(k++) = inst.X.col(c).dot(inst.y);
  return d;
}

OlsSummary ols_fit(const ProblemInstance& inst) {
  const Index n = inst.n(), m = inst.m();
  if (n <= m) throw DimensionError("ols_fit: n <= m");
  Mat gram = inst.X.transpose() * inst.X;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success)
    throw DegenerateDesignError("ols_fit: singular Gram");
  Vec xty = inst.X.transpose() * inst.y;
  return ols_fit_gram(llt, xty, inst.y.squaredNorm(), n, m);
}

OlsSummary ols_fit_gram(const Eigen::LLT<Mat>& gram_chol, const Vec& xtz,
                        double z_sqnorm, Index n, Index m) {
  OlsSummary s;
  s.beta_hat = gram_chol.solve(xtz);
  double rss = z_sqnorm - xtz.dot(s.beta_hat);
  rss = std::max(rss, 0.0);
  s.sigma_hat2 = rss / static_cast<double>(n - m);
  Mat siginv = gram_chol.solve(Mat::Identity(m, m));
  s.t_stats.resize(m);
  s.p_values.resize(m);
  const double df = static_cast<double>(n - m);
  for (Index j = 0; j < m; ++j) {
    double se = std::sqrt(std::max(s.sigma_hat2 * siginv(j, j), 0.0));
    double t = se > 0.0 ? s.beta_hat(j) / se
                        : (s.beta_hat(j) == 0.0 ? 0.0
                                                : std::copysign(1e12, s.beta_hat(j)));
    s.t_stats(j) = t;
    s.p_values(j) = 2.0 * student_t_cdf(-std::abs(t), df);
  }
  return s;
}

double null_sigma_hat(const HypothesisDecomposition& dec, Index n, Index m) {
  return dec.rho * dec.rho / static_cast<double>(n - m + 1);
}

std::vector<Index> bh_reject(const Vec& p_values, double alpha) {
  const Index m = p_values.size();
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return p_values(a) < p_values(b); });
  Index R = 0;
  for (Index r = m; r >= 1; --r) {
    if (p_values(order[r - 1]) <= alpha * static_cast<double>(r) / static_cast<double>(m)) {
      R = r;
      break;
    }
  }
  std::vector<Index> rej(order.begin(), order.begin() + R);
  std::sort(rej.begin(), rej.end());
  return rej;
}

}  // namespace ckn
