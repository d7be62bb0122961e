#include "halfspace/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "halfspace/kernels.hpp"

namespace halfspace {

double Region::distance(cplx z) const {
  double d = std::numeric_limits<double>::infinity();
  for (cplx p : points) d = std::min(d, std::abs(z - p));
  for (const Disk& k : disks) {
    double r = std::abs(z - k.center);
    d = std::min(d, k.boundary_only ? std::abs(r - k.radius)
                                    : std::max(0.0, r - k.radius));
  }
  return d;
}

bool Region::contains(cplx z, double tol) const { return distance(z) <= tol; }

std::string case_name(CaseVariant v) {
  switch (v) {
    case CaseVariant::Case1: return "Case1";
    case CaseVariant::Case2: return "Case2";
    case CaseVariant::Case3Nilpotent: return "Case3Nilpotent";
    case CaseVariant::Case3Deferred: return "Case3Deferred";
  }
  throw SpecError("unknown case variant");
}

namespace {

constexpr int kOracleWindow = 8192;   // index window for diagonal value sets
constexpr int kBoundarySamples = 64;  // per curve component

std::vector<cplx> circle_samples(cplx center, double radius) {
  std::vector<cplx> out;
  out.reserve(kBoundarySamples);
  for (int i = 0; i < kBoundarySamples; ++i) {
    double t = 2.0 * M_PI * i / kBoundarySamples;
    out.push_back(center + radius * cplx(std::cos(t), std::sin(t)));
  }
  return out;
}

bool is_real_rule(const SequenceRule& r) {
  // All supported rules are real-valued; kept as a guard for extensions.
  (void)r;
  return true;
}

SpectralInfo diagonal_oracle(const OperatorSpec& spec) {
  SpectralInfo info;
  const SequenceRule rule = spec.rule;
  for (int n = 1; n <= kOracleWindow; ++n)
    info.sigma.points.push_back(rule.eval(n));
  // Derived set (limit points) of the supported rules.
  cplx limit;
  switch (rule.kind) {
    case SequenceRule::Kind::one_over_n:
    case SequenceRule::Kind::one_over_2n_minus_1:
    case SequenceRule::Kind::zero_even_one_over_n_odd:
    case SequenceRule::Kind::geometric:
      limit = 0.0;
      break;
    case SequenceRule::Kind::constant:
      limit = rule.value;
      break;
  }
  info.sigma.points.push_back(limit);
  info.sigma_e.points.push_back(limit);
  info.boundary_e_samples = {limit};
  info.point_spectrum = [rule](cplx z) {
    for (int n = 1; n <= kOracleWindow; ++n)
      if (std::abs(rule.eval(n) - z) <= 1e-14) return PointSpectrumAnswer::yes;
    return PointSpectrumAnswer::no;
  };
  info.eigenpair = [rule](long n) { return std::make_pair(rule.eval(n), n); };
  return info;
}

SpectralInfo disk_oracle(double radius, bool point_spectrum_open_disk) {
  SpectralInfo info;
  info.sigma.disks.push_back({cplx(0, 0), radius, false});
  info.sigma_e.disks.push_back({cplx(0, 0), radius, true});
  info.boundary_e_samples = circle_samples(cplx(0, 0), radius);
  info.point_spectrum = [radius, point_spectrum_open_disk](cplx z) {
    if (!point_spectrum_open_disk) return PointSpectrumAnswer::no;
    return std::abs(z) < radius - 1e-14 ? PointSpectrumAnswer::yes
                                        : PointSpectrumAnswer::no;
  };
  return info;
}

}  // namespace

SpectralInfo spectral_oracle(const OperatorSpec& spec) {
  if (!spec.perturbations.empty())
    throw SpecError("oracle refuses to guess spectra of perturbed specs "
                    "(essential data only would be available)");
  switch (spec.effective_family()) {
    case Family::diagonal:
      if (!is_real_rule(spec.rule))
        throw SpecError("diagonal oracle supports real rules only");
      return diagonal_oracle(spec);
    case Family::unilateral_shift:
      return disk_oracle(1.0, false);
    case Family::adjoint_shift:
      return disk_oracle(1.0, true);
    case Family::weighted_shift: {
      if (!spec.weight_limit)
        throw SpecError("weighted_shift oracle needs a declared weight limit");
      double r = *spec.weight_limit;
      if (!(r > 0)) throw SpecError("weight limit must be positive");
      return disk_oracle(r, false);
    }
    case Family::nilpotent_pair: {
      SpectralInfo info;
      info.sigma.points = {cplx(0, 0)};
      info.sigma_e.points = {cplx(0, 0)};
      info.boundary_e_samples = {cplx(0, 0)};
      info.point_spectrum = [](cplx z) {
        return std::abs(z) <= 1e-14 ? PointSpectrumAnswer::yes
                                    : PointSpectrumAnswer::no;
      };
      return info;
    }
    case Family::band:
      throw SpecError("no analytic oracle for general band specs");
    case Family::perturbed:
      throw SpecError("perturbed spec must declare a base family");
  }
  throw SpecError("unknown family");
}

CaseTag select_beta(const OperatorSpec& spec) {
  SpectralInfo info = spectral_oracle(spec);
  bool all_unknown = !info.boundary_e_samples.empty();
  for (cplx b : info.boundary_e_samples) {
    PointSpectrumAnswer a = info.point_spectrum(b);
    if (a != PointSpectrumAnswer::unknown) all_unknown = false;
    if (a == PointSpectrumAnswer::no) return {CaseVariant::Case1, b};
  }
  if (all_unknown)
    throw OracleIncomplete("point spectrum unknown on all boundary samples");
  // Case 2: eigenvalues accumulating at a boundary point of sigma_e.
  if (info.eigenpair) {
    for (cplx b : info.boundary_e_samples) {
      if (info.point_spectrum(b) != PointSpectrumAnswer::yes) continue;
      int close = 0;
      for (long n = 1; n <= kOracleWindow; ++n) {
        cplx ev = info.eigenpair(n).first;
        double d = std::abs(ev - b);
        if (d > 0 && d < 1e-2) ++close;
      }
      if (close >= 8) return {CaseVariant::Case2, b};
    }
  }
  if (spec.effective_family() == Family::nilpotent_pair)
    return {CaseVariant::Case3Nilpotent, cplx(0, 0)};
  return {CaseVariant::Case3Deferred, cplx(0, 0)};
}

namespace {

// Zero of the harmonic-probe Weyl function F(t) = sum_j w_j^2/(d_j - t)
// inside the gap below the k-th largest diagonal value (double precision;
// the halfspace module re-refines in quad for the actual probe).
double gap_zero(const std::vector<double>& sorted_desc,
                const std::vector<double>& w2_sorted, int k) {
  const double hi = sorted_desc[k - 1];
  const double lo = sorted_desc[k];
  auto F = [&](double t) {
    double s = 0.0;
    for (std::size_t j = 0; j < sorted_desc.size(); ++j)
      s += w2_sorted[j] / (sorted_desc[j] - t);
    return s;
  };
  double a = lo + (hi - lo) * 1e-12, b = hi - (hi - lo) * 1e-12;
  double fa = F(a), fb = F(b);
  if (!(fa < 0 && fb > 0))
    throw ApproachFailure("no Weyl-function sign change inside the gap");
  for (int it = 0; it < 200; ++it) {
    double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    double fm = F(m);
    (fm < 0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

// Fractional positions (as multiples of the distinct-value count) for the
// even/odd interleaved schedule. The first slot is a negative sentinel: it is
// pinned to a fixed shallow gap index so the half-space cutoff always trims
// it, which keeps the certified tail norms monotone as the truncation grows.
constexpr double kFirstSlotSentinel = -1.0;

std::vector<double> slot_fractions(int count) {
  const int ne = (count + 1) / 2;  // even-position slots
  if (ne < 3) throw ApproachFailure("schedule needs at least 5 points");
  const double lo = std::clamp(1.02 - 0.072 * ne, 0.28, 0.84);
  const double step = (0.96 - lo) / std::max(1, ne - 2);
  std::vector<double> evens, odds;
  evens.push_back(kFirstSlotSentinel);
  for (int j = 0; j < ne - 1; ++j) evens.push_back(lo + j * step);
  odds.push_back(std::max(0.12, lo - 0.5 * step));
  for (int j = 2; j < ne; ++j) odds.push_back(lo + (j - 1.5) * step);
  odds.push_back(std::min(0.985, 0.96 + 0.5 * step));  // even counts only
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(i % 2 == 0 ? evens[i / 2] : odds[i / 2]);
  return out;
}

std::vector<cplx> diagonal_approach(const OperatorSpec& spec, int count,
                                    int dim) {
  if (dim < 16)
    throw ApproachFailure("gap placement needs a truncation dim >= 16");
  std::vector<double> d;
  d.reserve(dim);
  for (int n = 1; n <= dim; ++n) {
    cplx v = spec.rule.eval(n);
    if (std::abs(v.imag()) > 0)
      throw ApproachFailure("gap placement needs a real diagonal");
    d.push_back(v.real());
  }
  // Sort descending together with harmonic weights w_j = 1/j (normalized).
  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return d[a] > d[b]; });
  std::vector<double> ds(dim), w2(dim);
  double wsum = 0.0;
  for (int i = 0; i < dim; ++i) wsum += 1.0 / double((i + 1)) / double(i + 1);
  for (int i = 0; i < dim; ++i) {
    ds[i] = d[idx[i]];
    double w = 1.0 / double(idx[i] + 1);
    w2[i] = w * w / wsum;
  }
  for (int i = 1; i < dim; ++i)
    if (ds[i - 1] <= ds[i])
      throw ApproachFailure("diagonal values must be distinct for gap "
                            "placement");
  const int k_first = std::min(20, std::max(3, dim / 6));
  std::vector<int> ks;
  for (double f : slot_fractions(count)) {
    int k = f == kFirstSlotSentinel
                ? k_first
                : std::clamp(int(std::lround(f * dim)), 1, dim - 1);
    while (std::find(ks.begin(), ks.end(), k) != ks.end() && k < dim - 1) ++k;
    if (std::find(ks.begin(), ks.end(), k) != ks.end())
      throw ApproachFailure("cannot place distinct gap points");
    ks.push_back(k);
  }
  std::vector<cplx> lambdas;
  lambdas.reserve(count);
  for (int k : ks) lambdas.emplace_back(gap_zero(ds, w2, k), 0.0);
  return lambdas;
}

}  // namespace

std::vector<cplx> generate_approach(const OperatorSpec& spec,
                                    const CaseTag& tag, const IdealSpec& ideal,
                                    int count, double budget, int dim) {
  if (tag.variant != CaseVariant::Case1)
    throw PreconditionError("generate_approach requires a Case1 tag");
  if (count < 8) throw ApproachFailure("approach sequences need count >= 8");
  SpectralInfo info = spectral_oracle(spec);
  std::vector<cplx> lambdas;
  switch (spec.effective_family()) {
    case Family::diagonal:
      lambdas = diagonal_approach(spec, count, dim);
      break;
    case Family::unilateral_shift:
    case Family::adjoint_shift:
    case Family::weighted_shift: {
      // Radial approach from outside the disk.
      for (int n = 1; n <= count; ++n)
        lambdas.push_back(tag.beta * (1.0 + std::pow(2.0, -double(n))));
      break;
    }
    default:
      throw ApproachFailure("no approach recipe for this family");
  }
  // Distinctness and margin from sigma.
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (std::size_t j = i + 1; j < lambdas.size(); ++j)
      if (lambdas[i] == lambdas[j])
        throw ApproachFailure("approach points collide");
    if (info.sigma.distance(lambdas[i]) <= 0)
      throw ApproachFailure("approach point inside sigma");
  }
  std::vector<double> shifted;
  for (cplx l : lambdas) shifted.push_back(std::abs(l - tag.beta));
  if (!certify_membership(shifted, ideal, budget).pass)
    throw ApproachFailure("approach sequence fails the ideal budget " +
                          std::to_string(budget));
  return lambdas;
}

StructuredOp structured_form(const TruncatedOperator& T) {
  const OperatorSpec& spec = T.spec;
  StructuredOp op;
  const int n = T.dim;
  switch (spec.effective_family()) {
    case Family::diagonal:
      op.d = T.matrix.diagonal();
      break;
    case Family::unilateral_shift:
    case Family::weighted_shift:
    case Family::nilpotent_pair:
      op.d = Vec::Zero(n);
      op.sub = Vec(n - 1);
      for (int i = 1; i < n; ++i) op.sub[i - 1] = T.matrix(i, i - 1);
      break;
    default:
      throw SpecError("no structured form for this family");
  }
  if (!spec.perturbations.empty()) {
    Mat U(n, spec.perturbations.size()), V(n, spec.perturbations.size());
    U.setZero();
    V.setZero();
    int c = 0;
    for (const auto& p : spec.perturbations) {
      if (p.i <= n && p.j <= n) {
        U(p.i - 1, c) = p.coeff;
        V(p.j - 1, c) = 1.0;
      }
      ++c;
    }
    op.add_lowrank(U, V);
  }
  return op;
}

std::pair<Vec, GrowthCertificate> select_probe(const TruncatedOperator& T,
                                               const std::vector<cplx>& lambdas,
                                               std::uint64_t seed) {
  if (lambdas.empty()) throw PreconditionError("empty approach sequence");
  const int n = T.dim;
  std::vector<std::pair<std::string, Vec>> cands;
  for (int i = 0; i < std::min(8, n); ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    cands.emplace_back("e" + std::to_string(i + 1), std::move(e));
  }
  Vec h(n);
  for (int i = 0; i < n; ++i) h[i] = 1.0 / double(i + 1);
  h.normalize();
  cands.emplace_back("harmonic", std::move(h));
  for (int r = 0; r < 8; ++r) {
    std::mt19937_64 rng(seed + std::uint64_t(r));
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
    v.normalize();
    cands.emplace_back("random" + std::to_string(r + 1), std::move(v));
  }

  bool structured = true;
  StructuredOp op;
  try {
    op = structured_form(T);
  } catch (const SpecError&) {
    structured = false;
  }
  auto norms_for = [&](const Vec& e) {
    if (structured) return kernels::resolvent_norms(op, e, lambdas);
    std::vector<double> out;
    for (cplx lam : lambdas)
      out.push_back(resolvent_solve(T, lam, e).x.norm());
    return out;
  };

  GrowthCertificate best;
  Vec best_vec;
  double best_score = -1.0;
  for (auto& [label, vec] : cands) {
    std::vector<double> norms;
    try {
      norms = norms_for(vec);
    } catch (const SingularResolvent&) {
      continue;  // candidate-independent, but keep the guard local
    }
    double score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 2 < norms.size(); ++i)
      score = std::min(score, norms[i + 2] / norms[i]);
    if (norms.size() <= 2) score = norms.back() / norms.front();
    if (score > best_score) {
      best_score = score;
      best.winner = label;
      best.norms = norms;
      best.score = score;
      best_vec = vec;
    }
  }
  if (best.norms.empty())
    throw NumericalFailure("no probe candidate admitted resolvent solves");
  best.growth_factor = best.norms.back() / best.norms.front();
  best.weak_growth = best.growth_factor < 10.0;
  best.monotone_from = int(best.norms.size()) - 1;
  for (int i = int(best.norms.size()) - 2; i >= 0; --i) {
    if (best.norms[i] <= best.norms[i + 1]) best.monotone_from = i;
    else break;
  }
  return {best_vec, best};
}

}  // namespace halfspace
