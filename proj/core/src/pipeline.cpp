#include "ckn/pipeline.hpp"

#include "ckn/star.hpp"

namespace ckn {

Method method_from_string(const std::string& s) {
  if (s == "bh") return Method::BH;
  if (s == "knockoff") return Method::Knockoff;
  if (s == "cknockoff") return Method::CKnockoff;
  if (s == "cknockoff-star") return Method::CKnockoffStar;
  throw DimensionError("unknown method: " + s);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::BH: return "bh";
    case Method::Knockoff: return "knockoff";
    case Method::CKnockoff: return "cknockoff";
    case Method::CKnockoffStar: return "cknockoff-star";
  }
  return "?";
}

RejectionReport run_method(const ProblemInstance& inst, Method method,
                           const CknConfig& cfg) {
  switch (method) {
    case Method::BH: return bh_report(inst, cfg);
    case Method::Knockoff: return knockoff_only_report(inst, cfg);
    case Method::CKnockoff: return cknockoff_reject(inst, cfg);
    case Method::CKnockoffStar: return cknockoff_star_reject(inst, cfg);
  }
  throw DimensionError("run_method: bad method");
}

}  // namespace ckn
