#pragma once

#include <string>
#include <vector>

#include "simplerf/params.hpp"

namespace simplerf {

struct GradcheckCase {
  std::string name;
  ad::GradcheckReport report;
};

// Checks every loss term of one backend against central differences on a
// micro model over a small procedural scene. Sampling plans and reliability
// masks are frozen before checking, matching their stop-gradient role in
// training. Backend is "nerf", "tensorf", or "hashgrid". The default seed
// keeps every ReLU preactivation clear of its kink, where central
// differences are meaningless.
std::vector<GradcheckCase> gradcheck_suite(const std::string& backend, double tol,
                                           uint64_t seed = 24);

}  // namespace simplerf
