#pragma once

#include <optional>

#include "halfspace/checker.hpp"

namespace halfspace {

// Full artifact bundle of one scenario run (kept so callers — the CLI block
// dumper and the tests — can reach the raw matrices behind the report).
struct ScenarioArtifacts {
  CaseTag tag;
  std::optional<ApproachSequence> seq;
  std::optional<AlmostOrthogonalSystem> sys;
  std::optional<HalfSpaceDecomposition2x2> dec;
  std::optional<ObliqueDecomposition> oblique;
  std::optional<BlockForm3x3> refined;
  std::vector<DerivationCertificate> derivations;
};

struct ScenarioResult {
  VerificationReport report;
  ScenarioArtifacts artifacts;
};

// Executes the configured stages, captures stage errors into the report with
// stage tags, and attaches the independent checker's certificates.
// Deterministic for fixed seeds. errors: none thrown — failures land in the
// report (report.exit_code() carries the 0/2/3/4 contract).
ScenarioResult run_scenario(const ScenarioConfig& cfg);

// CSV dumps (row-major, "re+imj", 17 significant digits) of the raw block
// matrices into `dir`. errors: IoError.
void dump_blocks(const ScenarioArtifacts& art, const std::string& dir);

}  // namespace halfspace
