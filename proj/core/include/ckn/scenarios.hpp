#pragma once

#include <string>
#include <vector>

#include "ckn/csv.hpp"
#include "ckn/pipeline.hpp"

namespace ckn {

enum class DesignKind { IidNormal, Mcc, MccBlock, CoefAr, XAr };
enum class NoiseKind { Gaussian, StudentT };

DesignKind design_from_string(const std::string& s);
std::string to_string(DesignKind k);

struct Scenario {
  DesignKind design = DesignKind::IidNormal;
  Index m = 100, n = 300, m1 = 10;
  int K = 20, G = 5, r = 3;  // MCC block parameters; mcc-block has m = K*G
  double beta_star = 3.5;
  NoiseKind noise = NoiseKind::Gaussian;
  double sigma = 1.0;
  double t_df = 3.0;
  double alpha = 0.05;
  std::uint64_t seed = 7;
};

/// Block-diagonal MCC design; per-block Gram r (I - J/(G+1)) before column
/// standardization; rows per block = r(G+1) - 1.
Mat mcc_design(int K, int G, int r);

struct GeneratedTrial {
  ProblemInstance inst;
  std::vector<bool> null_mask;  // true = null hypothesis
  Index m1 = 0;
};

GeneratedTrial generate(const Scenario& sc, std::uint64_t trial_index);

/// Bisection on beta_star against MC-estimated BH TPR.
double calibrate_signal(Scenario sc, double target_tpr, double comparator_alpha,
                        int pilot_trials = 200, double tol = 0.02);

struct MethodAggregate {
  std::string method;
  double fdr = 0, fdr_se = 0, tpr = 0, tpr_se = 0;
  std::vector<double> fdp, tpp;  // per trial
  double runtime_sec = 0;
  int failures = 0;
};

struct TrialAggregate {
  std::vector<MethodAggregate> methods;
  long sandwich_violations = 0;
  int trials = 0;
  double mean_b_null_sum = 0;   // mean over trials of sum_{j in H0} b_j
  double mean_b0_null_sum = 0;  // same for the un-stopped budget
};

TrialAggregate run_trials(const Scenario& sc, const std::vector<Method>& methods,
                          int trials, const CknConfig& cfg, int threads = 1);

/// Drops mutation columns with fewer than 3 ones, dedupes exact duplicate
/// columns keeping the first, no intercept; the drug column is the response.
ProblemInstance hiv_preprocess(const CsvTable& raw, const std::string& drug_col,
                               double alpha);

}  // namespace ckn
