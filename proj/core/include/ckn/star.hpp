#pragma once

#include "ckn/calibration.hpp"

namespace ckn {

/// S* = {j in S : p_j <= alpha/m ∧ 0.01 alpha / ceil(1/alpha - 1),
///       rank(s+_j) <= k_cand}.
std::vector<Index> star_candidate_set(const InstanceContext& ctx,
                                      const Vec& scores, const Vec& p_values,
                                      const std::vector<Index>& filter);

/// Fast numerical-integration membership test for j against a given response
/// (the instance's own y when `response` is null).
bool rstar_membership(const InstanceContext& ctx, const HypBasis& basis,
                      const Vec* response, std::uint64_t seed);

/// R*(z) = R^Kn(z) ∪ {members of S*(z)} for an arbitrary response z.
std::vector<Index> rstar_set(const InstanceContext& ctx, const Vec& z,
                             std::uint64_t seed);

RejectionReport cknockoff_star_reject(const ProblemInstance& inst,
                                      const CknConfig& cfg);

/// Star pass on an already-completed calibration run (shares all caches).
RejectionReport star_refine(CalibrationRun& run);

}  // namespace ckn
