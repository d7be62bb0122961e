#include "halfspace/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace halfspace {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

OperatorSpec spec_from_json(const json& j) {
  OperatorSpec s;
  if (j.is_string()) {
    // shorthand: "<family> [rule]"
    std::istringstream in(j.get<std::string>());
    std::string fam, rule;
    in >> fam >> rule;
    if (fam.empty()) bad("spec", "empty shorthand");
    try {
      s.family = family_from_name(fam);
      if (!rule.empty()) s.rule.kind = rule_from_name(rule);
    } catch (const Error& e) {
      bad("spec", e.what());
    }
    return s;
  }
  if (!j.is_object()) bad("spec", "expected an object or shorthand string");
  if (!j.contains("family")) bad("spec.family", "missing");
  try {
    s.family = family_from_name(get_string(j.at("family"), "spec.family"));
    if (j.contains("base"))
      s.base = family_from_name(get_string(j.at("base"), "spec.base"));
    if (j.contains("rule")) {
      const json& r = j.at("rule");
      if (r.is_string()) {
        s.rule.kind = rule_from_name(r.get<std::string>());
      } else if (r.is_object()) {
        if (r.contains("kind"))
          s.rule.kind = rule_from_name(get_string(r.at("kind"), "spec.rule.kind"));
        if (r.contains("value")) s.rule.value = get_number(r.at("value"), "spec.rule.value");
        if (r.contains("ratio")) s.rule.ratio = get_number(r.at("ratio"), "spec.rule.ratio");
      } else {
        bad("spec.rule", "expected a string or object");
      }
    }
    if (j.contains("declared_bound"))
      s.declared_bound = get_number(j.at("declared_bound"), "spec.declared_bound");
    if (j.contains("weight_limit"))
      s.weight_limit = get_number(j.at("weight_limit"), "spec.weight_limit");
    if (j.contains("perturbations")) {
      const json& ps = j.at("perturbations");
      if (!ps.is_array()) bad("spec.perturbations", "expected a list");
      for (const json& p : ps) {
        RankOneTerm t;
        t.i = long(get_number(p.at("i"), "spec.perturbations[].i"));
        t.j = long(get_number(p.at("j"), "spec.perturbations[].j"));
        double re = p.contains("re") ? get_number(p.at("re"), "spec.perturbations[].re") : 0.0;
        double im = p.contains("im") ? get_number(p.at("im"), "spec.perturbations[].im") : 0.0;
        t.coeff = cplx(re, im);
        s.perturbations.push_back(t);
      }
    }
  } catch (const json::exception& e) {
    bad("spec", e.what());
  }
  return s;
}

PipelineFlags pipeline_from_json(const json& j) {
  PipelineFlags p;
  p.decompose2 = false;
  auto set_stage = [&](const std::string& name) {
    if (name == "decompose2") p.decompose2 = true;
    else if (name == "oblique") p.oblique = true;
    else if (name == "refine3") p.refine3 = true;
    else if (name == "derivation") p.derivation = true;
    else bad("pipeline", "unknown stage '" + name + "'");
  };
  if (j.is_string()) {
    set_stage(j.get<std::string>());
  } else if (j.is_array()) {
    for (const json& e : j) set_stage(get_string(e, "pipeline[]"));
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_boolean()) bad("pipeline." + it.key(), "expected a bool");
      if (it.value().get<bool>()) set_stage(it.key());
    }
  } else {
    bad("pipeline", "expected a string, list or object");
  }
  // later stages build on their predecessors
  if (p.derivation) p.refine3 = true;
  if (p.oblique || p.refine3) p.decompose2 = true;
  return p;
}

}  // namespace

double ScenarioConfig::tol_scale() const {
  auto it = tolerances.find("tol_scale");
  if (it != tolerances.end()) return it->second;
  if (const char* env = std::getenv("HALFSPACE_TOL_SCALE")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v > 0) return v;
  }
  return 1.0;
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ScenarioConfig cfg;
  if (j.contains("schema_version")) {
    cfg.schema_version = int(get_number(j.at("schema_version"), "schema_version"));
    if (cfg.schema_version != kConfigSchemaVersion)
      bad("schema_version", "unsupported version");
  }
  if (!j.contains("spec")) bad("spec", "missing");
  cfg.spec = spec_from_json(j.at("spec"));
  if (!j.contains("dim")) bad("dim", "missing");
  cfg.dim = int(get_number(j.at("dim"), "dim"));
  if (!j.contains("epsilon")) bad("epsilon", "missing");
  cfg.epsilon = get_number(j.at("epsilon"), "epsilon");
  if (j.contains("ideal")) {
    try {
      cfg.ideal = ideal_from_name(get_string(j.at("ideal"), "ideal"));
    } catch (const ConfigError&) {
      bad("ideal", "unknown ideal name");
    }
  }
  if (j.contains("pipeline")) cfg.pipeline = pipeline_from_json(j.at("pipeline"));
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (!s.is_object()) bad("seeds", "expected an object");
    if (s.contains("probe"))
      cfg.probe_seed = std::uint64_t(get_number(s.at("probe"), "seeds.probe"));
    if (s.contains("x_seed"))
      cfg.x_seed = std::uint64_t(get_number(s.at("x_seed"), "seeds.x_seed"));
  }
  if (j.contains("x_count")) cfg.x_count = int(get_number(j.at("x_count"), "x_count"));
  if (j.contains("count")) cfg.count = int(get_number(j.at("count"), "count"));
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) bad("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      cfg.tolerances[it.key()] = get_number(it.value(), "tolerances." + it.key());
  }
  if (j.contains("out")) cfg.out_path = get_string(j.at("out"), "out");
  if (j.contains("blocks_out")) cfg.blocks_dir = get_string(j.at("blocks_out"), "blocks_out");
  if (j.contains("fixed_stamp")) {
    if (!j.at("fixed_stamp").is_boolean()) bad("fixed_stamp", "expected a bool");
    cfg.fixed_stamp = j.at("fixed_stamp").get<bool>();
  }
  validate_config(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: parse failure in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ScenarioConfig& cfg) {
  json spec;
  spec["family"] = family_name(cfg.spec.family);
  if (cfg.spec.family == Family::perturbed)
    spec["base"] = family_name(cfg.spec.base);
  spec["rule"] = {{"kind", rule_name(cfg.spec.rule.kind)},
                  {"value", cfg.spec.rule.value},
                  {"ratio", cfg.spec.rule.ratio}};
  spec["declared_bound"] = cfg.spec.declared_bound;
  if (cfg.spec.weight_limit) spec["weight_limit"] = *cfg.spec.weight_limit;
  if (!cfg.spec.perturbations.empty()) {
    json ps = json::array();
    for (const RankOneTerm& t : cfg.spec.perturbations)
      ps.push_back({{"i", t.i},
                    {"j", t.j},
                    {"re", t.coeff.real()},
                    {"im", t.coeff.imag()}});
    spec["perturbations"] = ps;
  }
  json j;
  j["schema_version"] = cfg.schema_version;
  j["spec"] = spec;
  j["dim"] = cfg.dim;
  j["epsilon"] = cfg.epsilon;
  j["ideal"] = cfg.ideal.name();
  j["pipeline"] = {{"decompose2", cfg.pipeline.decompose2},
                   {"oblique", cfg.pipeline.oblique},
                   {"refine3", cfg.pipeline.refine3},
                   {"derivation", cfg.pipeline.derivation}};
  j["seeds"] = {{"probe", cfg.probe_seed}, {"x_seed", cfg.x_seed}};
  j["x_count"] = cfg.x_count;
  j["count"] = cfg.count;
  json tol = json::object();
  for (const auto& [k, v] : cfg.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  j["fixed_stamp"] = cfg.fixed_stamp;
  return j;
}

void validate_config(const ScenarioConfig& cfg) {
  if (cfg.dim < 64) bad("dim", "pipeline runs need dim >= 64");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) bad("epsilon", "must lie in (0, 1)");
  if (cfg.count < 0) bad("count", "must be nonnegative");
  if (cfg.x_count < 0) bad("x_count", "must be nonnegative");
  if (cfg.pipeline.derivation && cfg.x_count == 0) bad("x_count", "derivation stage needs draws");
  for (const auto& [k, v] : cfg.tolerances)
    if (!(v > 0)) bad("tolerances." + k, "must be positive");
}

int auto_count(int dim, bool refine) {
  if (refine) return 19;
  if (dim < 768) return 9;
  if (dim < 1536) return 11;
  if (dim < 3072) return 15;
  return 19;
}

}  // namespace halfspace
