#pragma once

#include <string>
#include <vector>

#include "halfspace/config.hpp"

namespace halfspace {

inline constexpr int kReportSchemaVersion = 1;

// One verified invariant: measured value against a one- or two-sided window.
// An absent side serializes as null. `strict` applies to the finite sides.
struct CertificateEntry {
  std::string stage;      // approach | gram | riesz | core | blocks | oblique
                          // | refine3 | derivation | checker
  std::string invariant;  // human-readable name of the checked property
  double measured = 0.0;
  bool has_lower = false, has_upper = false;
  double lower = 0.0, upper = 0.0;
  bool strict = false;
  bool pass = false;

  bool evaluate() const;  // recompute pass from the stored numbers

  static CertificateEntry below(const std::string& stage,
                                const std::string& invariant, double measured,
                                double upper, bool strict = false);
  static CertificateEntry window(const std::string& stage,
                                 const std::string& invariant, double measured,
                                 double lower, double upper);
};

struct StageTiming {
  std::string stage;
  double millis = 0.0;
};

struct VerificationReport {
  int schema_version = kReportSchemaVersion;
  json scenario;             // canonical config echo
  std::string case_variant;  // dispatch outcome
  std::string error_stage;   // stage where a captured error occurred, or ""
  std::string error_class;   // "config" | "numerical" | "invariant" | ""
  std::string error_message;
  std::vector<CertificateEntry> certificates;
  json diagnostics;  // free-form per-stage numbers (K, dims, spectra, ...)
  json environment;  // toolchain stamp; fixed under --fixed-stamp
  std::vector<StageTiming> timing;  // zeroed under --fixed-stamp

  bool all_pass() const;
  // 0 all-pass, 2 invariant failure, 3 config error, 4 numerical failure.
  int exit_code() const;
};

json environment_stamp(bool fixed, double tol_scale);

// Canonical serialization: stable key order (insertion order of the builder),
// floating-point numerals at 17 significant digits, one key per line.
std::string canonical_json(const json& j);

json report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const json& j);  // ReportVersionError

// errors: IoError on write failure.
void emit_report(const VerificationReport& r, const std::string& path);

// Re-parses and re-evaluates every certificate from its stored numbers.
// Returns 0 when all pass (and the stored flags agree), else 2.
// errors: IoError (unreadable), ReportVersionError (truncated/drifted schema).
int verify_report(const std::string& path);

}  // namespace halfspace
