#pragma once

#include "halfspace/halfspace.hpp"
#include "halfspace/refine.hpp"
#include "halfspace/report.hpp"

namespace halfspace {

// Independent verification pass: every function below recomputes its measured
// values from the raw artifact matrices (bases, selected vectors, thin
// similarity factors, stored blocks) and a freshly built truncation of the
// spec — never from certificate numbers the pipeline cached. `tol_scale`
// multiplies every threshold.

std::vector<CertificateEntry> check_approach(const OperatorSpec& spec, int dim,
                                             const CaseTag& tag,
                                             const ApproachSequence& seq,
                                             double tol_scale);

std::vector<CertificateEntry> check_system(const AlmostOrthogonalSystem& sys,
                                           double tol_scale);

std::vector<CertificateEntry> check_decomposition(
    const OperatorSpec& spec, int dim, const CaseTag& tag,
    const HalfSpaceDecomposition2x2& dec, const IdealSpec& ideal,
    double epsilon, double tol_scale);

std::vector<CertificateEntry> check_oblique(const OperatorSpec& spec, int dim,
                                            const CaseTag& tag,
                                            const HalfSpaceDecomposition2x2& dec,
                                            const ObliqueDecomposition& ob,
                                            double tol_scale);

std::vector<CertificateEntry> check_refine(const OperatorSpec& spec, int dim,
                                           const CaseTag& tag,
                                           const BlockForm3x3& form,
                                           const IdealSpec& ideal,
                                           double epsilon, double tol_scale);

// Aggregated worst case over all test-operator draws.
std::vector<CertificateEntry> check_derivation(
    const std::vector<DerivationCertificate>& certs, double tol_scale);

}  // namespace halfspace
