#pragma once

#include <string>

#include "ckn/calibration.hpp"

namespace ckn {

enum class Method { BH, Knockoff, CKnockoff, CKnockoffStar };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

RejectionReport run_method(const ProblemInstance& inst, Method method,
                           const CknConfig& cfg);

}  // namespace ckn
