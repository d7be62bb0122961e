#pragma once

#include <Eigen/LU>

#include "halfspace/opcore.hpp"

namespace halfspace {

// Structured operator A = B + U V^* where B is diagonal (or lower
// bidiagonal) and U, V are thin. Closed under the similarity updates the
// pipeline performs (S = I + thin outer products), which keeps every stage
// of the N = 4096 refinement away from dense N^3 work: shifted solves cost
// O(N r^2) via Woodbury.
struct StructuredOp {
  Vec d;    // diagonal of B
  Vec sub;  // subdiagonal of B (size dim-1) or empty
  Mat U, V; // N x r, A = B + U V^*

  int dim() const { return int(d.size()); }
  int rank_correction() const { return int(U.cols()); }

  Vec apply(const Vec& x) const;
  Vec apply_adjoint(const Vec& x) const;
  Mat dense() const;

  // Appends a low-rank correction U2 V2^*.
  void add_lowrank(const Mat& U2, const Mat& V2);

  // Adjoint as a StructuredOp; only available for diagonal base.
  StructuredOp adjoint() const;

  static StructuredOp diag_of(const TruncatedOperator& T);
};

// Cached factorization of (A - lambda I) for one shift.
class ShiftedSolver {
 public:
  ShiftedSolver(const StructuredOp& A, cplx lambda,
                double pivot_tol = kDefaultPivotTol);

  Vec solve(const Vec& b) const;          // (A - lambda)^{-1} b
  Vec solve_adjoint(const Vec& b) const;  // (A - lambda)^{-*} b

  // Hager-style 1-norm condition estimate of (A - lambda I).
  double kappa_estimate() const;

 private:
  Vec base_solve(const Vec& b) const;
  Vec base_solve_adjoint(const Vec& b) const;

  const StructuredOp& A_;
  cplx lambda_;
  Mat BinvU_;   // B_lambda^{-1} U
  Mat BadjV_;   // B_lambda^{-*} V
  Eigen::PartialPivLU<Mat> small_;      // I + V^* B_lambda^{-1} U
  Eigen::PartialPivLU<Mat> small_adj_lu_;  // its adjoint
};

}  // namespace halfspace
