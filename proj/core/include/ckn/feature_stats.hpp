#pragma once

#include <string>

#include "ckn/lasso.hpp"
#include "ckn/types.hpp"

namespace ckn {

enum class StatKind { LCD, LCD_T, LSM, CLSM };

StatKind stat_kind_from_string(const std::string& s);
std::string to_string(StatKind k);

struct FeatureStatistics {
  StatKind kind = StatKind::LCD;
  Vec W;  // length m
  double lambda_used = 0.0;
};

/// Inputs are Gram-side: gram = X_plus^T X_plus (2m x 2m), xty = X_plus^T y.
/// All statistics get the deterministic tie perturbation applied so that
/// every |W_j| is positive and distinct.
FeatureStatistics lcd(const Mat& gram, const Vec& xty, double lambda,
                      const Vec* warm = nullptr);
FeatureStatistics lcd_t(const Mat& gram, const Vec& xty, double lambda,
                        const Vec* warm = nullptr);
FeatureStatistics lsm(const CoarsePath& path);
FeatureStatistics clsm(const CoarsePath& path);

/// Perturbs exact ties in |W| (including zeros) by hash-derived offsets below
/// 1e-12 * scale; non-tied comparisons are untouched.
void break_ties(Vec& W);

/// Dispatcher used by the pipeline; lambda = 2*sigma_tilde for LCD/LCD-T,
/// coarse path from the same Gram for LSM/C-LSM.
FeatureStatistics compute_stat(StatKind kind, const Mat& gram, const Vec& xty,
                               double sigma_tilde, int L = 20,
                               const Vec* warm = nullptr);

}  // namespace ckn
