#pragma once

#include <string>

#include "ckn/calibration.hpp"
#include "ckn/scenarios.hpp"

namespace ckn {

/// JSON serialization of a single-run rejection report.
std::string report_to_json(const RejectionReport& rep);
void write_report_json(const std::string& path, const RejectionReport& rep);

/// JSON serialization of a simulation aggregate.
std::string aggregate_to_json(const TrialAggregate& agg, const Scenario& sc);
void write_aggregate_json(const std::string& path, const TrialAggregate& agg,
                          const Scenario& sc);

/// Tidy per-trial ECDF data: method, trial, fdp, tpp.
void write_ecdf_csv(const std::string& path, const TrialAggregate& agg);

}  // namespace ckn
