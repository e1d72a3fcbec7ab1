#include "ckn/report.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace ckn {

namespace {

using nlohmann::json;

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v(i)));
  return a;
}

void dump(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::string report_to_json(const RejectionReport& rep) {
  json j;
  j["method"] = rep.method;
  j["alpha"] = rep.alpha;
  j["seed"] = rep.seed;
  j["rejected"] = rep.rejected;
  json hyps = json::array();
  for (const auto& h : rep.per_hypothesis) {
    json r;
    r["index"] = h.index;
    r["name"] = h.name;
    r["W"] = finite_or_null(h.W);
    r["p_value"] = finite_or_null(h.p_value);
    r["T"] = finite_or_null(h.T);
    r["in_knockoff_set"] = h.in_knockoff_set;
    r["fallback_decision"] = h.fallback_decision;
    r["samples_used"] = h.samples_used;
    r["truncated"] = h.truncated;
    if (h.degenerate) r["degenerate"] = true;
    if (h.star_reject) r["star_reject"] = true;
    if (h.unverified_numerics) r["unverified_numerics"] = true;
    hyps.push_back(std::move(r));
  }
  j["per_hypothesis"] = std::move(hyps);
  json d;
  d["w_hat"] = finite_or_null(rep.w_hat);
  d["tau"] = rep.tau;
  d["w_star"] = finite_or_null(rep.w_star);
  d["tau_1"] = rep.tau_1;
  d["b"] = vec_to_json(rep.b);
  d["b0"] = vec_to_json(rep.b0);
  j["diagnostics"] = std::move(d);
  return j.dump(2);
}

void write_report_json(const std::string& path, const RejectionReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << report_to_json(rep) << '\n';
}

std::string aggregate_to_json(const TrialAggregate& agg, const Scenario& sc) {
  json j;
  j["scenario"] = to_string(sc.design);
  j["m"] = sc.m;
  j["n"] = sc.n;
  j["m1"] = sc.m1;
  j["K"] = sc.K;
  j["G"] = sc.G;
  j["r"] = sc.r;
  j["alpha"] = sc.alpha;
  j["beta_star"] = sc.beta_star;
  j["seed"] = sc.seed;
  j["trials"] = agg.trials;
  j["sandwich_violations"] = agg.sandwich_violations;
  j["mean_b_null_sum"] = agg.mean_b_null_sum;
  j["mean_b0_null_sum"] = agg.mean_b0_null_sum;
  json ms = json::array();
  for (const auto& mk : agg.methods) {
    json r;
    r["method"] = mk.method;
    r["fdr"] = mk.fdr;
    r["fdr_se"] = mk.fdr_se;
    r["tpr"] = mk.tpr;
    r["tpr_se"] = mk.tpr_se;
    r["runtime_sec"] = mk.runtime_sec;
    r["failures"] = mk.failures;
    ms.push_back(std::move(r));
  }
  j["methods"] = std::move(ms);
  return j.dump(2);
}

void write_aggregate_json(const std::string& path, const TrialAggregate& agg,
                          const Scenario& sc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << aggregate_to_json(agg, sc) << '\n';
}

void write_ecdf_csv(const std::string& path, const TrialAggregate& agg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << "method,trial,fdp,tpp\n";
  for (const auto& mk : agg.methods)
    for (std::size_t t = 0; t < mk.fdp.size(); ++t)
      out << mk.method << ',' << t << ',' << mk.fdp[t] << ',' << mk.tpp[t]
          << '\n';
}

}  // namespace ckn
