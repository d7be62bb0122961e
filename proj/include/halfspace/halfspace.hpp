#pragma once

#include <optional>
#include <vector>

#include "halfspace/ideals.hpp"
#include "halfspace/linops.hpp"
#include "halfspace/quad.hpp"
#include "halfspace/spectra.hpp"

namespace halfspace {

// ---------------------------------------------------------------------------
// Thin similarity transforms: S = I + P Q^* with S^{-1} = I + Pi Qi^*. Every
// similarity the pipeline builds is a low-rank update of the identity, so the
// N = 4096 runs never materialize an N x N transform.
// ---------------------------------------------------------------------------
struct ThinSimilarity {
  Mat P, Q;    // S = I + P Q^*
  Mat Pi, Qi;  // S^{-1} = I + Pi Qi^*

  static ThinSimilarity identity(int n);
  // From the forward part alone: Pi = -P (I + Q^*P)^{-1}, Qi = Q.
  static ThinSimilarity from_forward(const Mat& P, const Mat& Q);

  Vec apply(const Vec& x) const;
  Vec apply_inv(const Vec& x) const;
  Mat apply(const Mat& X) const;      // column-wise
  Mat apply_inv(const Mat& X) const;  // column-wise
  ThinSimilarity adjoint_inverse() const;  // S^{-*}
  Mat dense(int n) const;
  // ||S S^{-1} - I|| computed on the thin factors.
  double inverse_defect() const;
};

// this * other (operator composition, x -> this(other(x))).
ThinSimilarity compose(const ThinSimilarity& a, const ThinSimilarity& b);

// ---------------------------------------------------------------------------
// Pipeline artifacts.
// ---------------------------------------------------------------------------

struct ApproachSequence {
  cplx beta;
  std::vector<cplx> lambdas;
  Vec probe;
  std::vector<double> alphas;
  Mat vectors;  // columns h_n, unit norm
  std::vector<double> residuals;  // ||A h_n - lambda_n h_n - alpha_n e||
  std::vector<double> kappas;     // condition estimates of (A - lambda_n)
  // Quad-precision mirror for the elementwise (real diagonal) path; the
  // selection thresholds 4^-(j+m) sit far below double roundoff for large
  // systems, so overlaps must be formed from these columns when present.
  std::vector<qvec> qvectors;
  std::vector<qreal> qlambdas;
  std::vector<qreal> qalphas;
  qvec qprobe;

  bool has_quad() const { return !qvectors.empty(); }
};

struct AlmostOrthogonalSystem {
  // Position 1 holds the probe e itself; positions 2..m hold selected h_n.
  std::vector<int> selected;  // indices into the ApproachSequence, per position >= 2
  Mat l;                      // N x m, l.col(0) = e
  std::vector<qvec> l_quad;   // quad copies when the sequence carried them
  Mat gram;                   // recomputed Gram of l (quad-accumulated if possible)
  double max_offdiag = 0.0;   // max |gram(j,m)| over j != m
  double riesz_lower = 0.0, riesz_upper = 0.0;
  Mat f;                      // orthonormalized basis, f.col(0) = e
  int span_dim = 0;
  std::vector<cplx> lambdas;  // per position (position 1 entry unused)
  std::vector<double> alphas;
  MembershipCertificate alpha_cert;  // {alpha_{n_k}} against the ideal
  double alpha_sq_sum = 0.0;
};

struct SimilarityMap {
  Mat F, L;  // raw artifacts: orthonormal basis / selected vectors (N x m)
  ThinSimilarity S;  // S = I + (L - F) F^*
  double sigma_min = 0.0, sigma_max = 0.0;  // restricted to M' = span F
  double inv_defect = 0.0;                  // ||S S^{-1} - I||
  double map_residual = 0.0;                // max_k ||S f_k - l_k||
  double offspace_residual = 0.0;           // ||S x - x|| for x orthogonal to M'
};

struct CoreMatrix {
  Mat G;  // m x m coordinates of S^{-1} P_{M'} A S on the f basis
  std::vector<cplx> diag;       // G(k,k)
  std::vector<cplx> first_row;  // G(0,k)
  Vec beta_coeffs;              // P_{M'} A e = sum_j beta_j l_j
  double beta_residual = 0.0;   // ||L beta - P_{M'} A e||
  double off_pattern = 0.0;     // max |G(i,j)| outside row 0 / col 0 / diagonal
  double op_norm_bound = 0.0;   // bound on ||A|| used for the pattern check
};

struct HalfChoice {
  int K = 0;
  std::vector<int> M_cols;  // 0-based f-column indices (positions 2k, k >= K)
};

struct BlockCerts {
  double norm_T11 = 0.0, ideal_T11 = 0.0;
  double norm_R = 0.0, ideal_R = 0.0;
  int rank_R = 0;
  std::vector<double> sv_R;
  double t11_offdiag = 0.0;
  double r_direction_overlap = 0.0;  // |<principal left sv of R, f_1>|
  int dim_M = 0, dim_Mperp = 0;
};

struct HalfSpaceDecomposition2x2 {
  CaseTag tag;
  int K = 0;
  std::vector<int> M_cols;  // f-column indices forming M
  Mat basis_M;              // N x q orthonormal basis of M
  Mat T11;                  // q x q
  Mat R_emb;                // N x q, columns live in M-perp (embedded form)
  Mat T12_emb;              // q x N, equals B_M^* A restricted to M-perp
  std::optional<Mat> T22;   // materialized only at small N
  std::optional<Mat> basis_Mperp;  // explicit complement basis when T22 is set
  SimilarityMap sim;
  BlockCerts certs;
  std::vector<cplx> t11_lambdas;  // diagonal entries (for downstream splits)
};

struct ObliqueDecomposition {
  Mat W1;  // basis of M-hat = S[M] (columns S b_k = l at M positions)
  Mat W2;  // S^{-*} B_M; the idempotent is E = W1 W2^*
  Mat That11;     // q x q coordinates on the W1 basis
  Mat Rhat_emb;   // N x q, (1 - E) (A) W1
  Mat That12_emb; // q x N
  double idem_defect = 0.0;
  int rank_Rhat = 0;
  std::vector<double> sv_Rhat;
  double spectra_match = 0.0;  // Hausdorff-type distance of eig(That11) vs eig(T11)
};

enum class EquivalenceMode { psd_diagonal, projection };

struct EquivalenceResult {
  Mat S1, S2, B;
  double cond_S1 = 0.0, cond_S2 = 0.0;
};

// ---------------------------------------------------------------------------
// Operations. `A` is the (already beta-shifted) operator in structured form.
// ---------------------------------------------------------------------------

// h_n = alpha_n (A - lambda_n)^{-1} e with A h_n = lambda_n h_n + alpha_n e.
// For real diagonal A with real probe/lambdas the computation runs in quad
// precision, re-refining each lambda to the exact root of the probe's Weyl
// function inside its spectral gap (rounded lambdas leave overlaps at the
// 1e-16 level, far above the deep selection thresholds).
// errors: SingularResolvent; residual > 1e-6 * ||A|| -> ConstructionError.
ApproachSequence near_eigenvectors(const StructuredOp& A, const CaseTag& tag,
                                   const std::vector<cplx>& lambdas,
                                   const Vec& probe);

// Greedy forward first-fit selection of vectors with pairwise overlaps below
// 4^-(j+m); position 1 is the probe itself. The alpha subsequence is
// certified against the ideal within alpha_budget.
// errors: SelectionExhausted when candidates run out before target_size.
AlmostOrthogonalSystem select_almost_orthogonal(
    const ApproachSequence& seq, int target_size,
    const IdealSpec& ideal = IdealSpec{IdealKind::compact, 1.0},
    double alpha_budget = 1.0);

// Extreme eigenvalues of the Gram matrix. errors: lower <= 0 ->
// ConstructionError.
std::pair<double, double> riesz_certificate(const AlmostOrthogonalSystem& sys);

// Modified Gram-Schmidt with one reorthogonalization pass (quad when the
// system stores quad columns); f_1 = e exactly. Fills sys.f.
void orthonormalize(AlmostOrthogonalSystem& sys);

// S = I + (L - F) F^*: maps f_k to l_k, identity orthogonal to span F.
SimilarityMap build_similarity(const AlmostOrthogonalSystem& sys);

// Coordinates of S^{-1} P_{M'} A S on the f basis, split into the
// diagonal/first-row/first-column pattern.
CoreMatrix assemble_core(const StructuredOp& A,
                         const AlmostOrthogonalSystem& sys,
                         const SimilarityMap& sim);

// Smallest K meeting the three simultaneous budgets (sup of even-position
// |lambda| tail, their ideal norm, l2 norm of the even-position alpha tail).
// errors: BudgetExhausted.
HalfChoice choose_halfspace(const CoreMatrix& core,
                            const AlmostOrthogonalSystem& sys,
                            const IdealSpec& ideal, double epsilon);

// Blocks of S^{-1} A S with respect to M + M-perp. T22 (and an explicit
// complement basis) is materialized only when dim <= dense_limit.
HalfSpaceDecomposition2x2 decompose_2x2(const StructuredOp& A,
                                        const AlmostOrthogonalSystem& sys,
                                        const SimilarityMap& sim,
                                        const HalfChoice& choice,
                                        const IdealSpec& ideal, double epsilon,
                                        const CaseTag& tag,
                                        int dense_limit = 1536);

// Case 2: restriction to the span of eigenvectors accumulating at beta
// (supported for the diagonal family with basis eigenvectors), Case 1
// pipeline on the (self-adjoint) restriction, embedding back.
HalfSpaceDecomposition2x2 decompose_case2(const OperatorSpec& spec,
                                          const TruncatedOperator& T,
                                          const IdealSpec& ideal,
                                          double epsilon, int count);

// Case 3 (nilpotent_pair): half of the kernel basis (even positions of the
// even-coordinate kernel list) carries T11 = R = 0 with S = I.
HalfSpaceDecomposition2x2 decompose_case3(const OperatorSpec& spec,
                                          const TruncatedOperator& T,
                                          const IdealSpec& ideal,
                                          double epsilon);

// Oblique (algebraic direct sum) form: E = S P_M S^{-1}, blocks of the
// unconjugated A with respect to S[M] + S[M-perp].
ObliqueDecomposition oblique_form(const StructuredOp& A,
                                  const HalfSpaceDecomposition2x2& dec);

// T12 = U Sigma V^*: psd_diagonal returns (U^*, V, Sigma); projection mode
// rescales to an exact orthogonal projection matrix. delta <= 0 selects the
// default gap 1e-4 * sigma_max. errors: RangeNotClosed.
EquivalenceResult equivalence_replace(const Mat& T12, EquivalenceMode mode,
                                      double delta = 0.0);

// ---------------------------------------------------------------------------
// Helpers shared with refine/pipeline.
// ---------------------------------------------------------------------------

// S^{-1} A S as a StructuredOp (base of A plus thin corrections).
StructuredOp conjugate_structured(const StructuredOp& A,
                                  const ThinSimilarity& S);

// Operator 2-norm of P Q^* from the thin factors.
double thin_product_norm(const Mat& P, const Mat& Q);

// Upper bound on ||A||.
double structured_norm_bound(const StructuredOp& A);

}  // namespace halfspace
