#include "ckn/feature_stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <vector>

namespace ckn {

StatKind stat_kind_from_string(const std::string& s) {
  if (s == "lcd") return StatKind::LCD;
  if (s == "lcd-t") return StatKind::LCD_T;
  if (s == "lsm") return StatKind::LSM;
  if (s == "c-lsm") return StatKind::CLSM;
  throw DimensionError("unknown statistic kind: " + s);
}

std::string to_string(StatKind k) {
  switch (k) {
    case StatKind::LCD: return "lcd";
    case StatKind::LCD_T: return "lcd-t";
    case StatKind::LSM: return "lsm";
    case StatKind::CLSM: return "c-lsm";
  }
  return "?";
}

void break_ties(Vec& W) {
  const Index m = W.size();
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  const double eps_base = 1e-13 * scale;

  // Salt the hash with the data so degenerate inputs do not get a frozen
  // sign pattern across trials; still a pure function of W.
  std::uint64_t salt = 0;
  for (Index j = 0; j < m; ++j)
    salt ^= std::bit_cast<std::uint64_t>(W(j)) + 0x9e3779b97f4a7c15ULL * (j + 1);

  std::map<double, std::vector<Index>> groups;
  for (Index j = 0; j < m; ++j) groups[std::abs(W(j))].push_back(j);
  for (auto& [absw, idx] : groups) {
    if (absw != 0.0 && idx.size() == 1) continue;
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      return split_seed(salt, a) < split_seed(salt, b);
    });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Index j = idx[k];
      double off = eps_base * static_cast<double>(k + 1) /
                   static_cast<double>(idx.size() + 1);
      if (W(j) > 0.0)
        W(j) += off;
      else if (W(j) < 0.0)
        W(j) -= off;
      else
        W(j) = (split_seed(salt, j, 0x5eedULL) & 1) ? off : -off;
    }
  }
}

FeatureStatistics lcd(const Mat& gram, const Vec& xty, double lambda,
                      const Vec* warm) {
  if (lambda <= 0) throw DimensionError("lcd: lambda must be positive");
  const Index m = gram.cols() / 2;
  LassoFit fit = lasso_fit_gram(gram, xty, lambda, warm);
  FeatureStatistics st;
  st.kind = StatKind::LCD;
  st.lambda_used = lambda;
  st.W.resize(m);
  for (Index j = 0; j < m; ++j)
    st.W(j) = std::abs(fit.beta(j)) - std::abs(fit.beta(j + m));
  break_ties(st.W);
  return st;
}

FeatureStatistics lcd_t(const Mat& gram, const Vec& xty, double lambda,
                        const Vec* warm) {
  if (lambda <= 0) throw DimensionError("lcd_t: lambda must be positive");
  const Index m = gram.cols() / 2;
  LassoFit fit = lasso_fit_gram(gram, xty, lambda, warm);
  FeatureStatistics st;
  st.kind = StatKind::LCD_T;
  st.lambda_used = lambda;
  st.W.resize(m);
  for (Index j = 0; j < m; ++j) {
    double w = std::abs(fit.beta(j)) - std::abs(fit.beta(j + m));
    if (w != 0.0)
      st.W(j) = w + 2.0 * lambda * (w > 0 ? 1.0 : -1.0);
    else
      st.W(j) = std::abs(fit.gradient(j)) - std::abs(fit.gradient(j + m));
  }
  break_ties(st.W);
  return st;
}

namespace {

FeatureStatistics from_entry_values(const Vec& lam, StatKind kind) {
  const Index m = lam.size() / 2;
  FeatureStatistics st;
  st.kind = kind;
  st.W.resize(m);
  for (Index j = 0; j < m; ++j) {
    double a = lam(j), b = lam(j + m);
    double s = a > b ? 1.0 : (a < b ? -1.0 : 0.0);
    st.W(j) = std::max(a, b) * s;
  }
  break_ties(st.W);
  return st;
}

}  // namespace

FeatureStatistics lsm(const CoarsePath& path) {
  const Index p = static_cast<Index>(path.entry_index.size());
  Vec lam(p);
  for (Index j = 0; j < p; ++j) lam(j) = path.lambda_at(path.entry_index[j]);
  return from_entry_values(lam, StatKind::LSM);
}

FeatureStatistics clsm(const CoarsePath& path) {
  return from_entry_values(path.lambda_hat, StatKind::CLSM);
}

FeatureStatistics compute_stat(StatKind kind, const Mat& gram, const Vec& xty,
                               double sigma_tilde, int L, const Vec* warm) {
  switch (kind) {
    case StatKind::LCD:
      return lcd(gram, xty, 2.0 * sigma_tilde, warm);
    case StatKind::LCD_T:
      return lcd_t(gram, xty, 2.0 * sigma_tilde, warm);
    case StatKind::LSM:
      return lsm(coarse_path(gram, xty, sigma_tilde, L));
    case StatKind::CLSM:
      return clsm(coarse_path(gram, xty, sigma_tilde, L));
  }
  throw DimensionError("compute_stat: bad kind");
}

}  // namespace ckn
