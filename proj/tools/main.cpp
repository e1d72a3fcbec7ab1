#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "ckn/csv.hpp"
#include "ckn/report.hpp"
#include "ckn/scenarios.hpp"
#include "ckn/star.hpp"

namespace {

std::vector<ckn::Method> parse_methods(const std::string& csv) {
  std::vector<ckn::Method> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(ckn::method_from_string(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated knockoff procedures for Gaussian linear models"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "Run one method on a design/response pair");
  std::string design_path, response_path, method_str = "cknockoff",
              stat_str = "lcd-t", report_path = "report.json";
  double alpha = 0.05, alpha0_frac = 0.1;
  std::uint64_t seed = 42;
  int mc_truncation = 500, kcand = 3, kstep = 3, threads = 1;
  run->add_option("--design", design_path, "Design matrix CSV (header row)")
      ->required();
  run->add_option("--response", response_path, "Response CSV (single column)")
      ->required();
  run->add_option("--alpha", alpha, "Nominal FDR level");
  run->add_option("--method", method_str,
                  "bh | knockoff | cknockoff | cknockoff-star");
  run->add_option("--stat", stat_str, "lcd | lcd-t | lsm | c-lsm");
  run->add_option("--seed", seed, "Master RNG seed");
  run->add_option("--mc-truncation", mc_truncation, "Monte-Carlo sample cap");
  run->add_option("--alpha0-frac", alpha0_frac, "alpha_0 as a fraction of alpha");
  run->add_option("--kcand", kcand, "cKnockoff* candidate count");
  run->add_option("--kstep", kstep, "cKnockoff* nodes per candidate");
  run->add_option("--threads", threads, "Worker threads for fallback tests");
  run->add_option("--report", report_path, "Output JSON path");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Run a simulation scenario");
  std::string scenario_str = "mcc-block", methods_str = "bh,knockoff,cknockoff",
              out_path = "results.json", ecdf_path;
  int K = 20, G = 5, r = 3, trials = 400, sim_threads = 1;
  long m = 100, n = 300, m1 = 3;
  double sim_alpha = 0.05, beta_star = 0.0, t_df = 0.0;
  std::uint64_t sim_seed = 7;
  std::string sim_stat = "lcd-t";
  sim->add_option("--scenario", scenario_str,
                  "iid-normal | mcc | mcc-block | coef-ar | x-ar");
  sim->add_option("--K", K, "MCC block count");
  sim->add_option("--G", G, "Treatments per MCC block");
  sim->add_option("--r", r, "Replicates per treatment");
  sim->add_option("--m", m, "Hypotheses (non-MCC designs)");
  sim->add_option("--n", n, "Observations (non-MCC designs)");
  sim->add_option("--m1", m1, "Non-null count");
  sim->add_option("--alpha", sim_alpha, "Nominal FDR level");
  sim->add_option("--beta", beta_star,
                  "Signal magnitude (0 = calibrate against BH power 0.5)");
  sim->add_option("--t-df", t_df, "Student-t noise df (0 = Gaussian)");
  sim->add_option("--trials", trials, "Trial count");
  sim->add_option("--methods", methods_str, "Comma-separated method list");
  sim->add_option("--stat", sim_stat, "Feature statistic");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--threads", sim_threads, "Parallel trials");
  sim->add_option("--out", out_path, "Output JSON path");
  sim->add_option("--ecdf", ecdf_path, "Optional tidy per-trial CSV");

  // ---- hiv-prep ----
  auto* prep = app.add_subcommand("hiv-prep", "Preprocess a mutation table");
  std::string in_path, drug_col, out_design, out_response;
  prep->add_option("--in", in_path, "Raw CSV")->required();
  prep->add_option("--drug-col", drug_col, "Resistance outcome column")->required();
  prep->add_option("--out-design", out_design, "Output design CSV")->required();
  prep->add_option("--out-response", out_response, "Output response CSV")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ckn::CsvTable xt = ckn::read_csv(design_path);
      ckn::Vec y = ckn::read_vector_csv(response_path);
      ckn::ProblemInstance inst =
          ckn::make_instance(xt.values, y, alpha, xt.names);
      ckn::CknConfig cfg;
      cfg.stat = ckn::stat_kind_from_string(stat_str);
      cfg.seed = seed;
      cfg.mc_truncation = mc_truncation;
      cfg.alpha0_frac = alpha0_frac;
      cfg.k_cand = kcand;
      cfg.k_step = kstep;
      cfg.threads = threads;
      ckn::RejectionReport rep =
          ckn::run_method(inst, ckn::method_from_string(method_str), cfg);
      ckn::write_report_json(report_path, rep);
      std::cout << rep.method << ": " << rep.rejected.size()
                << " rejections -> " << report_path << '\n';
    } else if (*sim) {
      ckn::Scenario sc;
      sc.design = ckn::design_from_string(scenario_str);
      sc.K = K;
      sc.G = G;
      sc.r = r;
      sc.m = m;
      sc.n = n;
      sc.m1 = m1;
      sc.alpha = sim_alpha;
      sc.seed = sim_seed;
      if (t_df > 0) {
        sc.noise = ckn::NoiseKind::StudentT;
        sc.t_df = t_df;
      }
      if (beta_star > 0)
        sc.beta_star = beta_star;
      else
        sc.beta_star = ckn::calibrate_signal(sc, 0.5, 0.2);
      ckn::CknConfig cfg;
      cfg.stat = ckn::stat_kind_from_string(sim_stat);
      cfg.seed = sim_seed;
      ckn::TrialAggregate agg =
          ckn::run_trials(sc, parse_methods(methods_str), trials, cfg, sim_threads);
      ckn::write_aggregate_json(out_path, agg, sc);
      if (!ecdf_path.empty()) ckn::write_ecdf_csv(ecdf_path, agg);
      for (const auto& mk : agg.methods)
        std::cout << mk.method << ": FDR " << mk.fdr << " (se " << mk.fdr_se
                  << "), TPR " << mk.tpr << " (se " << mk.tpr_se << ")\n";
      std::cout << "sandwich violations: " << agg.sandwich_violations << '\n';
    } else if (*prep) {
      ckn::CsvTable raw = ckn::read_csv(in_path);
      ckn::ProblemInstance inst = ckn::hiv_preprocess(raw, drug_col, 0.05);
      ckn::write_csv(out_design, inst.X, inst.names);
      ckn::write_vector_csv(out_response, inst.y, drug_col);
      std::cout << "kept " << inst.m() << " mutation columns, " << inst.n()
                << " samples\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
