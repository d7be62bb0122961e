#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "halfspace/ideals.hpp"
#include "halfspace/linops.hpp"
#include "halfspace/opcore.hpp"

namespace halfspace {

// Region descriptor: finite point sets plus disks/circles. Enough for the
// supported families (diagonal value closures, unit disks and circles).
struct Region {
  struct Disk {
    cplx center;
    double radius = 0.0;
    bool boundary_only = false;
  };
  std::vector<cplx> points;
  std::vector<Disk> disks;

  double distance(cplx z) const;
  bool contains(cplx z, double tol = 1e-12) const;
};

enum class PointSpectrumAnswer { yes, no, unknown };

struct SpectralInfo {
  Region sigma;
  Region sigma_e;
  std::function<PointSpectrumAnswer(cplx)> point_spectrum;
  // Deterministic samples of the essential-spectrum boundary, 64 per
  // component, in a fixed order (tie-breaks depend on it).
  std::vector<cplx> boundary_e_samples;
  // n |-> (eigenvalue, basis index) for families whose eigenvectors are
  // basis vectors; absent otherwise.
  std::function<std::pair<cplx, long>(long)> eigenpair;  // may be empty
};

// errors: SpecError when the oracle refuses to guess (unsupported family or
// family/perturbation combination).
SpectralInfo spectral_oracle(const OperatorSpec& spec);

enum class CaseVariant { Case1, Case2, Case3Nilpotent, Case3Deferred };

std::string case_name(CaseVariant v);

struct CaseTag {
  CaseVariant variant = CaseVariant::Case1;
  cplx beta;
};

// Proof-case dispatch: Case1 with beta in the essential boundary off the
// point spectrum when such a boundary sample exists; Case2 when eigenvalues
// accumulate at a boundary sample; Case3 branches otherwise.
CaseTag select_beta(const OperatorSpec& spec);

// Generates `count` distinct lambda_n outside sigma approaching beta, with
// {|lambda_n - beta|} certified against the ideal within `budget`.
//
// For real-diagonal specs the lambdas are placed inside the spectral gaps
// between consecutive diagonal values (near the weighted-mean zeros of the
// harmonic-probe Weyl function of the `dim` truncation); this placement is
// what makes the Eq.-(2.3) selection attainable at finite scale. For shift
// families the path is radial: beta * (1 + 2^-n).
std::vector<cplx> generate_approach(const OperatorSpec& spec,
                                    const CaseTag& tag, const IdealSpec& ideal,
                                    int count, double budget, int dim);

struct GrowthCertificate {
  std::string winner;           // candidate label
  std::vector<double> norms;    // ||(T-lambda_n)^{-1} e|| for the winner
  double score = 0.0;           // min sliding-window norm ratio
  double growth_factor = 0.0;   // last/first norm
  bool weak_growth = false;     // growth_factor < 10
  int monotone_from = 0;        // norms nondecreasing from this index on
};

// Probe-candidate search: standard basis vectors e_1..e_8, the normalized
// harmonic vector, and 8 seeded random unit vectors, scored by the minimum
// sliding-window resolvent-norm ratio.
std::pair<Vec, GrowthCertificate> select_probe(
    const TruncatedOperator& T, const std::vector<cplx>& lambdas,
    std::uint64_t seed = 1000);

// Internal helper shared with the refinement: structured base matrix of a
// truncated family (diagonal or bidiagonal plus rank-one perturbations).
StructuredOp structured_form(const TruncatedOperator& T);

}  // namespace halfspace
