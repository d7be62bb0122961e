#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "halfspace/ideals.hpp"
#include "halfspace/opcore.hpp"

namespace halfspace {

using json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

struct PipelineFlags {
  bool decompose2 = true;
  bool oblique = false;
  bool refine3 = false;
  bool derivation = false;
};

struct ScenarioConfig {
  int schema_version = kConfigSchemaVersion;
  OperatorSpec spec;
  int dim = 0;
  double epsilon = 0.0;
  IdealSpec ideal;
  PipelineFlags pipeline;
  std::uint64_t probe_seed = 20240214;  // seeded random probe candidates
  std::uint64_t x_seed = 1;             // derivation test-operator draws
  int x_count = 100;
  int count = 0;  // approach sequence length; 0 selects the dim-based table
  std::map<std::string, double> tolerances;  // named overrides, incl tol_scale
  std::string out_path;
  std::string blocks_dir;
  bool fixed_stamp = false;

  // Effective global tolerance multiplier: the tol_scale override if present,
  // else the HALFSPACE_TOL_SCALE environment variable, else 1.
  double tol_scale() const;
};

// Accepts either the full object form for `spec` or the shorthand string
// "<family> [rule]" (e.g. "diagonal one_over_n"); `pipeline` may be an
// object, a single stage name, or a list of stage names.
// errors: ConfigError with the offending key path.
ScenarioConfig config_from_json(const json& j);
ScenarioConfig load_config(const std::string& path);

// Canonical echo of a validated config (stable key order).
json config_to_json(const ScenarioConfig& cfg);

// errors: ConfigError naming the violated key.
void validate_config(const ScenarioConfig& cfg);

// Approach-length table keyed on dimension (used when count == 0).
int auto_count(int dim, bool refine);

}  // namespace halfspace
