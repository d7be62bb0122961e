#include "halfspace/ideals.hpp"

#include <algorithm>
#include <cmath>

namespace halfspace {

std::string IdealSpec::name() const {
  switch (kind) {
    case IdealKind::compact: return "compact";
    case IdealKind::trace: return "trace";
    case IdealKind::schatten: {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "schatten:%g", p);
      return buf;
    }
  }
  throw ConfigError("unknown ideal kind");
}

IdealSpec ideal_from_name(const std::string& name) {
  if (name == "compact") return {IdealKind::compact, 0.0};
  if (name == "trace") return {IdealKind::trace, 1.0};
  const std::string prefix = "schatten:";
  if (name.rfind(prefix, 0) == 0) {
    double p = 0.0;
    try {
      std::size_t pos = 0;
      p = std::stod(name.substr(prefix.size()), &pos);
      if (pos != name.size() - prefix.size()) throw ConfigError("trailing junk");
    } catch (const std::exception&) {
      throw ConfigError("malformed schatten ideal name: " + name);
    }
    if (!(p >= 1.0)) throw ConfigError("schatten exponent must be >= 1");
    return {IdealKind::schatten, p};
  }
  throw ConfigError("unknown ideal name: " + name);
}

namespace {

std::vector<double> sorted_desc(std::vector<double> seq) {
  for (double v : seq)
    if (!(v >= 0.0))
      throw PreconditionError("ideal sequence entries must be nonnegative");
  std::sort(seq.begin(), seq.end(), std::greater<double>());
  return seq;
}

}  // namespace

double sequence_norm(const std::vector<double>& seq, const IdealSpec& ideal) {
  auto s = sorted_desc(seq);
  if (s.empty()) return 0.0;
  switch (ideal.kind) {
    case IdealKind::compact: return s.front();
    case IdealKind::trace: {
      double sum = 0.0;
      for (auto it = s.rbegin(); it != s.rend(); ++it) sum += *it;
      return sum;
    }
    case IdealKind::schatten: {
      if (ideal.p == 1.0) return sequence_norm(seq, {IdealKind::trace, 1.0});
      double sum = 0.0;
      for (auto it = s.rbegin(); it != s.rend(); ++it)
        sum += std::pow(*it, ideal.p);
      return std::pow(sum, 1.0 / ideal.p);
    }
  }
  throw ConfigError("unknown ideal kind");
}

double matrix_ideal_norm(const Mat& M, const IdealSpec& ideal) {
  return sequence_norm(singular_values(M), ideal);
}

MembershipCertificate certify_membership(const std::vector<double>& seq,
                                         const IdealSpec& ideal,
                                         double budget) {
  MembershipCertificate cert;
  cert.ideal = ideal;
  cert.sequence = sorted_desc(seq);
  cert.norm_value = sequence_norm(seq, ideal);
  cert.budget = budget;
  if (ideal.kind == IdealKind::compact) {
    // Tail-decay surrogate: entries past the halfway index must be small.
    std::size_t cut = (cert.sequence.size() + 1) / 2;
    double tail_max = 0.0;
    for (std::size_t i = cut; i < cert.sequence.size(); ++i)
      tail_max = std::max(tail_max, cert.sequence[i]);
    cert.pass = tail_max <= budget;
  } else {
    cert.pass = cert.norm_value <= budget;
  }
  return cert;
}

}  // namespace halfspace
