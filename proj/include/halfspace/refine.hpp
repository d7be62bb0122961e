#pragma once

#include <optional>

#include "halfspace/halfspace.hpp"

namespace halfspace {

// Even/odd interleaving of the T11 eigenbasis of a 2x2 decomposition.
// Returns f-column indices: N1 = even positions of the M list (the new first
// block), N2 = odd positions. pre: |M_cols| >= 8. errors: BudgetExhausted.
struct SplitIndices {
  std::vector<int> N1, N2;
};
SplitIndices split_halfspace(const HalfSpaceDecomposition2x2& dec);

struct BlockForm3x3 {
  CaseTag tag;
  Mat B1, B3;              // orthonormal bases of M1 and M3 (N x q1, N x q3)
  std::optional<Mat> B2;   // explicit middle basis at small N
  Mat T11, T33, T13, R31;  // small dense blocks
  Mat R21_emb;             // N x q1, component of column block in M2
  Mat R32_emb;             // q3 x N, action from M2 into M3
  Mat T12_emb;             // q1 x N
  Mat T23_emb;             // N x q3
  std::optional<Mat> T22;  // dense middle block at small N
  ThinSimilarity Shat;     // composite similarity (outer, then inner adjoint-inverse, then normalization)
  cplx beta;

  // certificates
  int rank_R21 = 0, rank_R31 = 0, rank_R32 = 0;
  std::vector<double> sv_R21, sv_R31, sv_R32;
  double norm_T11 = 0.0, norm_T33 = 0.0;
  double ideal_T11 = 0.0, ideal_T33 = 0.0;
  double offdiag_T11 = 0.0, offdiag_T33 = 0.0;
  double reassembly_residual = 0.0;  // sampled row-consistency vs the conjugated operator
  double adjoint_roundtrip = 0.0;    // double conjugate-transpose drift of inner blocks
  double op_norm_bound = 0.0;

  // inner-stage diagnostics
  int K_inner = 0, inner_span = 0;
  double inner_riesz_lower = 0.0, inner_riesz_upper = 0.0;
  double inner_max_offdiag = 0.0;
  std::vector<cplx> inner_lambdas;
};

// Theorem-3.1-style refinement: split M into N1 + N2, run the 2x2
// construction on the adjoint of the compressed lower-right block (with the
// shift 0), reassemble with the block interchange and conjugate-transposed
// sub-blocks, and normalize so T33 is diagonal. `A` is the beta-shifted
// operator in structured form; `dec` the outer 2x2 result.
BlockForm3x3 refine_3x3(const StructuredOp& A,
                        const HalfSpaceDecomposition2x2& dec,
                        const IdealSpec& ideal, double epsilon,
                        int dense_limit = 768);

struct DerivationCertificate {
  Mat C31;  // (3,1) block of the commutator with X
  Mat F;    // finite-rank part R31 X11 + R32 X21 - X32 R21 - X33 R31
  Mat A;    // T33 X31 - X31 T11
  double split_residual = 0.0;  // ||C31 - (F + A)||
  double split_tol = 0.0;       // 1e-12 ||X|| ||T||
  int rank_F = 0;
  std::vector<double> sv_C31, sv_A;
  double trace_A = 0.0;      // trace norm of A
  double trace_bound = 0.0;  // ||X|| (|||T11|||_1 + |||T33|||_1)
  double norm_X = 0.0;
  bool kyfan_ok = false;  // s_{k+4}(C31) <= s_k(A) + 1e-10 for all k
  bool pass = false;
};

// Commutator (3,1)-block certificate for a full test operator X (dim x dim).
// pre: form carries a materialized middle basis; X matches the dimension.
// errors: ConfigError on dimension mismatch.
DerivationCertificate derivation_certificate(const BlockForm3x3& form,
                                             const Mat& X);

}  // namespace halfspace
