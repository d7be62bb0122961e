#pragma once

#include <string>
#include <vector>

#include "halfspace/opcore.hpp"

namespace halfspace {

// Operator ideals as sequence-space membership functionals on singular value
// sequences: compact (c0 surrogate), Schatten-p (p >= 1) and trace class
// (= Schatten-1).

enum class IdealKind { compact, schatten, trace };

struct IdealSpec {
  IdealKind kind = IdealKind::trace;
  double p = 1.0;  // Schatten exponent; 1 for trace, unused for compact

  std::string name() const;
};

// Accepts "compact", "trace", "schatten:p" with p >= 1. errors: ConfigError.
IdealSpec ideal_from_name(const std::string& name);

// Ideal norm of diag(seq); entries must be nonnegative; sorting applied
// internally. sup for compact, (sum s^p)^(1/p) for schatten, sum for trace.
double sequence_norm(const std::vector<double>& seq, const IdealSpec& ideal);

// Ideal norm of the singular value sequence of M.
double matrix_ideal_norm(const Mat& M, const IdealSpec& ideal);

struct MembershipCertificate {
  IdealSpec ideal;
  std::vector<double> sequence;  // tested values, sorted nonincreasing
  double norm_value = 0.0;
  double budget = 0.0;
  bool pass = false;
};

// For normed kinds: pass iff norm <= budget. For compact: pass iff the max
// entry beyond index ceil(count/2) of the nonincreasing rearrangement is
// <= budget (finite-scale decay surrogate).
MembershipCertificate certify_membership(const std::vector<double>& seq,
                                         const IdealSpec& ideal, double budget);

}  // namespace halfspace
