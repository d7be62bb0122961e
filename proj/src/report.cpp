#include "halfspace/report.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace halfspace {

bool CertificateEntry::evaluate() const {
  if (!std::isfinite(measured)) return false;
  if (has_lower && (strict ? !(measured > lower) : !(measured >= lower)))
    return false;
  if (has_upper && (strict ? !(measured < upper) : !(measured <= upper)))
    return false;
  return true;
}

CertificateEntry CertificateEntry::below(const std::string& stage,
                                         const std::string& invariant,
                                         double measured, double upper,
                                         bool strict) {
  CertificateEntry c;
  c.stage = stage;
  c.invariant = invariant;
  c.measured = measured;
  c.has_upper = true;
  c.upper = upper;
  c.strict = strict;
  c.pass = c.evaluate();
  return c;
}

CertificateEntry CertificateEntry::window(const std::string& stage,
                                          const std::string& invariant,
                                          double measured, double lower,
                                          double upper) {
  CertificateEntry c;
  c.stage = stage;
  c.invariant = invariant;
  c.measured = measured;
  c.has_lower = c.has_upper = true;
  c.lower = lower;
  c.upper = upper;
  c.pass = c.evaluate();
  return c;
}

bool VerificationReport::all_pass() const {
  if (!error_class.empty()) return false;
  for (const CertificateEntry& c : certificates)
    if (!c.pass) return false;
  return true;
}

int VerificationReport::exit_code() const {
  if (error_class == "config") return 3;
  if (error_class == "numerical") return 4;
  if (error_class == "invariant") return 2;
  for (const CertificateEntry& c : certificates)
    if (!c.pass) return 2;
  return 0;
}

json environment_stamp(bool fixed, double tol_scale) {
  json e;
  e["compiler"] = __VERSION__;
  e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
               std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#if defined(_OPENMP)
  e["threads"] = omp_get_max_threads();
#else
  e["threads"] = 1;
#endif
  e["tol_scale"] = tol_scale;
  if (fixed) {
    e["timestamp"] = "fixed";
  } else {
    char buf[64];
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    e["timestamp"] = buf;
  }
  return e;
}

namespace {

void write_canonical(const json& j, std::string& out, int indent) {
  const std::string pad(std::size_t(indent) * 2, ' ');
  const std::string pad1(std::size_t(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad1;
        out += json(it.key()).dump();
        out += ": ";
        write_canonical(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const json& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad1;
        write_canonical(e, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      char buf[64];
      if (std::isfinite(v))
        std::snprintf(buf, sizeof buf, "%.17g", v);
      else
        std::snprintf(buf, sizeof buf, "\"%s\"", v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

json cert_to_json(const CertificateEntry& c) {
  json j;
  j["stage"] = c.stage;
  j["invariant"] = c.invariant;
  j["measured"] = c.measured;
  j["lower"] = c.has_lower ? json(c.lower) : json(nullptr);
  j["upper"] = c.has_upper ? json(c.upper) : json(nullptr);
  j["strict"] = c.strict;
  j["pass"] = c.pass;
  return j;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ReportVersionError(std::string("report: missing numeric field '") +
                             key + "'");
  return j.at(key).get<double>();
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ReportVersionError(std::string("report: missing string field '") +
                             key + "'");
  return j.at(key).get<std::string>();
}

CertificateEntry cert_from_json(const json& j) {
  CertificateEntry c;
  c.stage = string_field(j, "stage");
  c.invariant = string_field(j, "invariant");
  c.measured = number_field(j, "measured");
  if (!j.contains("lower") || !j.contains("upper") || !j.contains("strict") ||
      !j.contains("pass"))
    throw ReportVersionError("report: certificate entry missing fields");
  if (!j.at("lower").is_null()) {
    c.has_lower = true;
    c.lower = number_field(j, "lower");
  }
  if (!j.at("upper").is_null()) {
    c.has_upper = true;
    c.upper = number_field(j, "upper");
  }
  c.strict = j.at("strict").get<bool>();
  c.pass = j.at("pass").get<bool>();
  return c;
}

}  // namespace

std::string canonical_json(const json& j) {
  std::string out;
  write_canonical(j, out, 0);
  out += "\n";
  return out;
}

json report_to_json(const VerificationReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["scenario"] = r.scenario;
  j["case_variant"] = r.case_variant;
  j["error"] = {{"stage", r.error_stage},
                {"class", r.error_class},
                {"message", r.error_message}};
  json certs = json::array();
  for (const CertificateEntry& c : r.certificates) certs.push_back(cert_to_json(c));
  j["certificates"] = certs;
  j["diagnostics"] = r.diagnostics;
  j["environment"] = r.environment;
  json timing = json::array();
  for (const StageTiming& t : r.timing)
    timing.push_back({{"stage", t.stage}, {"millis", t.millis}});
  j["timing"] = timing;
  j["all_pass"] = r.all_pass();
  return j;
}

VerificationReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") ||
      !j.at("schema_version").is_number())
    throw ReportVersionError("report: missing schema_version");
  VerificationReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion)
    throw ReportVersionError("report: unsupported schema version " +
                             std::to_string(r.schema_version));
  for (const char* key :
       {"scenario", "case_variant", "error", "certificates", "diagnostics",
        "environment", "timing", "all_pass"})
    if (!j.contains(key))
      throw ReportVersionError(std::string("report: missing section '") + key + "'");
  r.scenario = j.at("scenario");
  r.case_variant = string_field(j, "case_variant");
  const json& err = j.at("error");
  r.error_stage = string_field(err, "stage");
  r.error_class = string_field(err, "class");
  r.error_message = string_field(err, "message");
  if (!j.at("certificates").is_array())
    throw ReportVersionError("report: certificates must be a list");
  for (const json& c : j.at("certificates"))
    r.certificates.push_back(cert_from_json(c));
  r.diagnostics = j.at("diagnostics");
  r.environment = j.at("environment");
  if (!j.at("timing").is_array())
    throw ReportVersionError("report: timing must be a list");
  for (const json& t : j.at("timing"))
    r.timing.push_back({string_field(t, "stage"), number_field(t, "millis")});
  return r;
}

void emit_report(const VerificationReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("report: cannot open '" + path + "' for writing");
  out << canonical_json(report_to_json(r));
  if (!out) throw IoError("report: write failure on '" + path + "'");
}

int verify_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("report: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ReportVersionError(std::string("report: unparseable (truncated?): ") +
                             e.what());
  }
  VerificationReport r = report_from_json(j);
  if (r.error_class == "config") return 3;
  if (r.error_class == "numerical") return 4;
  bool ok = r.error_class.empty();
  for (const CertificateEntry& c : r.certificates) {
    bool now = c.evaluate();
    if (!now || now != c.pass) ok = false;
  }
  if (j.at("all_pass").get<bool>() != ok) ok = false;
  return ok ? 0 : 2;
}

}  // namespace halfspace
