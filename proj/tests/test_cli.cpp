#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "halfspace/pipeline.hpp"

using namespace halfspace;
namespace fs = std::filesystem;

namespace {

json minimal_config() {
  return json{{"spec", "diagonal one_over_n"},
              {"dim", 256},
              {"epsilon", 0.05},
              {"ideal", "trace"}};
}

ScenarioConfig quick_config() {
  ScenarioConfig cfg = config_from_json(minimal_config());
  cfg.fixed_stamp = true;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(HALFSPACE_CLI_PATH) + " " + args +
                    " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config parsing: shorthand, defaults, pipeline forms") {
  ScenarioConfig cfg = config_from_json(minimal_config());
  CHECK(cfg.spec.effective_family() == Family::diagonal);
  CHECK(cfg.spec.rule.kind == SequenceRule::Kind::one_over_n);
  CHECK(cfg.dim == 256);
  CHECK(cfg.epsilon == doctest::Approx(0.05));
  CHECK(cfg.ideal.kind == IdealKind::trace);
  CHECK(cfg.pipeline.decompose2);
  CHECK_FALSE(cfg.pipeline.refine3);
  CHECK(cfg.probe_seed == 20240214);
  CHECK_NOTHROW(validate_config(cfg));

  json j = minimal_config();
  j["pipeline"] = json::array({"decompose2", "refine3"});
  j["ideal"] = "schatten:2";
  cfg = config_from_json(j);
  CHECK(cfg.pipeline.refine3);
  CHECK(cfg.ideal.kind == IdealKind::schatten);
  CHECK(cfg.ideal.p == doctest::Approx(2.0));

  j["spec"] = json{{"family", "perturbed"},
                   {"base", "diagonal"},
                   {"rule", "one_over_n"},
                   {"perturbations", json::array({json{{"i", 1},
                                                       {"j", 2},
                                                       {"re", 0.5},
                                                       {"im", -0.25}}})}};
  cfg = config_from_json(j);
  CHECK(cfg.spec.family == Family::perturbed);
  REQUIRE(cfg.spec.perturbations.size() == 1);
  CHECK(cfg.spec.perturbations[0].coeff == cplx(0.5, -0.25));
}

TEST_CASE("config validation rejects bad values with key paths") {
  json j = minimal_config();
  j["epsilon"] = 1.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = minimal_config();
  j.erase("spec");
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = minimal_config();
  j["dim"] = 32;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = minimal_config();
  j["ideal"] = "nuclear";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = minimal_config();
  j["spec"] = "diagonal no_such_rule";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  try {
    json k = minimal_config();
    k["epsilon"] = -1.0;
    config_from_json(k);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
  }
}

TEST_CASE("approach-length table and tolerance scale") {
  CHECK(auto_count(256, false) == 9);
  CHECK(auto_count(1024, false) == 11);
  CHECK(auto_count(2048, false) == 15);
  CHECK(auto_count(4096, false) == 19);
  CHECK(auto_count(256, true) == 19);

  ScenarioConfig cfg = quick_config();
  CHECK(cfg.tol_scale() == doctest::Approx(1.0));
  cfg.tolerances["tol_scale"] = 2.5;
  CHECK(cfg.tol_scale() == doctest::Approx(2.5));
  cfg.tolerances.clear();
  setenv("HALFSPACE_TOL_SCALE", "3.0", 1);
  CHECK(cfg.tol_scale() == doctest::Approx(3.0));
  unsetenv("HALFSPACE_TOL_SCALE");
  CHECK(cfg.tol_scale() == doctest::Approx(1.0));
}

TEST_CASE("certificate windows and strictness") {
  CertificateEntry c = CertificateEntry::below("s", "x", 0.5, 0.5);
  CHECK(c.evaluate());  // inclusive by default
  c = CertificateEntry::below("s", "x", 0.5, 0.5, /*strict=*/true);
  CHECK_FALSE(c.evaluate());
  c = CertificateEntry::window("s", "x", 1.0, 0.9, 1.1);
  CHECK(c.evaluate());
  c = CertificateEntry::window("s", "x", 0.8, 0.9, 1.1);
  CHECK_FALSE(c.evaluate());
}

TEST_CASE("canonical json prints floats at 17 significant digits") {
  json j;
  j["x"] = 0.1;
  j["n"] = 42;
  std::string s = canonical_json(j);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("42") != std::string::npos);
  CHECK(canonical_json(j) == s);  // stable
}

TEST_CASE("scenario run, report round trip, emitted-file verification") {
  ScenarioConfig cfg = quick_config();
  ScenarioResult res = run_scenario(cfg);
  CHECK(res.report.all_pass());
  CHECK(res.report.exit_code() == 0);
  CHECK(res.report.case_variant == "Case1");
  REQUIRE(res.artifacts.dec.has_value());

  // serialization round trip is the identity on the canonical form
  json j = report_to_json(res.report);
  VerificationReport back = report_from_json(j);
  CHECK(canonical_json(report_to_json(back)) == canonical_json(j));

  fs::path p = fs::temp_directory_path() / "halfspace_report_check.json";
  emit_report(res.report, p.string());
  CHECK(verify_report(p.string()) == 0);

  // identical configuration and seeds give byte-identical reports
  ScenarioResult res2 = run_scenario(cfg);
  CHECK(canonical_json(report_to_json(res2.report)) == canonical_json(j));
  fs::remove(p);
}

TEST_CASE("verification re-derives pass flags from stored numbers") {
  ScenarioConfig cfg = quick_config();
  ScenarioResult res = run_scenario(cfg);
  fs::path p = fs::temp_directory_path() / "halfspace_tampered.json";

  json j = report_to_json(res.report);
  j["certificates"].back()["measured"] = 1e6;  // breaks its window
  std::ofstream(p) << canonical_json(j);
  CHECK(verify_report(p.string()) == 2);

  j = report_to_json(res.report);
  j["certificates"].front()["pass"] = false;  // stored flag disagrees
  std::ofstream(p) << canonical_json(j);
  CHECK(verify_report(p.string()) == 2);

  std::string full = canonical_json(report_to_json(res.report));
  std::ofstream(p) << full.substr(0, full.size() / 2);  // truncated
  CHECK_THROWS_AS(verify_report(p.string()), ReportVersionError);

  j = report_to_json(res.report);
  j["schema_version"] = 99;
  std::ofstream(p) << canonical_json(j);
  CHECK_THROWS_AS(verify_report(p.string()), ReportVersionError);
  fs::remove(p);
}

TEST_CASE("captured stage failures map to the documented exit codes") {
  json j = minimal_config();
  j["spec"] = "unilateral_shift constant";
  j["ideal"] = "compact";
  ScenarioConfig cfg = config_from_json(j);
  cfg.fixed_stamp = true;
  ScenarioResult res = run_scenario(cfg);
  CHECK(res.report.exit_code() == 4);
  CHECK(res.report.error_class == "numerical");
  CHECK(res.report.error_stage == "selection");
  fs::path p = fs::temp_directory_path() / "halfspace_failed.json";
  emit_report(res.report, p.string());
  CHECK(verify_report(p.string()) == 4);
  fs::remove(p);
}

TEST_CASE("block dumps materialize the raw matrices") {
  ScenarioConfig cfg = quick_config();
  ScenarioResult res = run_scenario(cfg);
  fs::path dir = fs::temp_directory_path() / "halfspace_blocks_check";
  fs::remove_all(dir);
  dump_blocks(res.artifacts, dir.string());
  for (const char* f : {"basis_M.csv", "T11.csv", "R.csv", "T12.csv",
                        "similarity_F.csv", "similarity_L.csv"})
    CHECK(fs::exists(dir / f));
  // T11 row count matches the half-space dimension
  std::ifstream in(dir / "T11.csv");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == int(res.artifacts.dec->basis_M.cols()));
  fs::remove_all(dir);
}

TEST_CASE("command-line interface end to end") {
  fs::path out = fs::temp_directory_path() / "halfspace_cli_out.json";
  std::string base = "decompose --spec \"diagonal one_over_n\" --dim 128 "
                     "--epsilon 0.2 --ideal trace --fixed-stamp";
  CHECK(run_cli(base + " --out " + out.string()) == 0);
  CHECK(run_cli("verify " + out.string()) == 0);
  // config errors exit 3
  CHECK(run_cli("decompose --spec \"no_such_family\" --dim 128 "
                "--epsilon 0.2 --ideal trace") == 3);
  CHECK(run_cli("decompose --spec \"diagonal one_over_n\" --dim 128 "
                "--epsilon 1.5 --ideal trace") == 3);
  // numerical failures exit 4
  CHECK(run_cli("decompose --spec \"unilateral_shift constant\" --dim 128 "
                "--epsilon 0.2 --ideal compact") == 4);
  // byte-identical reruns under a fixed stamp
  fs::path out2 = fs::temp_directory_path() / "halfspace_cli_out2.json";
  CHECK(run_cli(base + " --out " + out2.string()) == 0);
  CHECK(slurp(out) == slurp(out2));
  fs::remove(out);
  fs::remove(out2);
}
