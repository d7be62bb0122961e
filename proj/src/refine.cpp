#include "halfspace/refine.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace halfspace {

SplitIndices split_halfspace(const HalfSpaceDecomposition2x2& dec) {
  if (int(dec.M_cols.size()) < 8)
    throw BudgetExhausted("half-space split needs at least 8 basis vectors");
  SplitIndices s;
  for (std::size_t i = 0; i < dec.M_cols.size(); ++i)
    (i % 2 == 1 ? s.N1 : s.N2).push_back(dec.M_cols[i]);
  return s;
}

namespace {

Mat apply_cols(const StructuredOp& A, const Mat& X) {
  Mat Y(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) Y.col(c) = A.apply(X.col(c));
  return Y;
}

Mat apply_adjoint_cols(const StructuredOp& A, const Mat& X) {
  Mat Y(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    Y.col(c) = A.apply_adjoint(X.col(c));
  return Y;
}

struct RankCert {
  int rank = 0;
  std::vector<double> sv;
};

RankCert thin_rank(const Mat& M) {
  RankCert c;
  if (M.size() == 0) return c;
  Eigen::BDCSVD<Mat> svd(M);
  const auto& s = svd.singularValues();
  c.sv.assign(s.data(), s.data() + s.size());
  // absolute floor keeps an all-noise (numerically zero) block at rank 0
  for (double v : c.sv)
    if (v > 1e-8 * c.sv[0] && v > 1e-12) ++c.rank;
  return c;
}

// Bracketed Illinois root finder for the increasing Weyl function of the
// compressed inner operator; drives the bracket to rounding width so the
// residual overlap of the resulting near-eigenvectors stays at noise level.
template <class Fn>
double root_illinois(Fn&& F, double a, double b, double fa, double fb) {
  int side = 0;
  for (int it = 0; it < 110; ++it) {
    double t = b - fb * (b - a) / (fb - fa);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    if (b - a <= 8.0 * 2.3e-16 * std::max(std::abs(a), std::abs(b))) break;
    double ft = F(t);
    if (ft == 0.0) return t;
    if (ft < 0) {
      a = t;
      fa = ft;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = t;
      fb = ft;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (a + b);
}

BlockForm3x3 refine_nilpotent(const StructuredOp& A,
                              const HalfSpaceDecomposition2x2& dec,
                              const IdealSpec& ideal, double epsilon,
                              int dense_limit);

}  // namespace

BlockForm3x3 refine_3x3(const StructuredOp& A,
                        const HalfSpaceDecomposition2x2& dec,
                        const IdealSpec& ideal, double epsilon,
                        int dense_limit) {
  if (dec.tag.variant == CaseVariant::Case3Nilpotent)
    return refine_nilpotent(A, dec, ideal, epsilon, dense_limit);
  const int n = A.dim();
  SplitIndices sp = split_halfspace(dec);
  const int q1 = int(sp.N1.size());
  if (q1 < 4) throw BudgetExhausted("first index set too small");
  Mat B1(n, q1);
  for (int k = 0; k < q1; ++k) B1.col(k) = dec.sim.F.col(sp.N1[k]);

  // Inner operator: C agrees with (T~22)^* on the complement of N1 and acts
  // as gamma on N1, so shifted solves against C are restricted solves.
  StructuredOp Ahat = conjugate_structured(A, dec.sim.S);
  StructuredOp Cpre = Ahat.adjoint();
  const double gamma = structured_norm_bound(A) + 3.0;
  Mat V1 = apply_cols(Ahat, B1);    // (Cpre)^* B1
  Mat CB1 = apply_cols(Cpre, B1);
  Mat U2 = -CB1 + B1 * (B1.adjoint() * CB1) + gamma * B1;
  StructuredOp C = Cpre;
  C.add_lowrank(-B1, V1);
  C.add_lowrank(U2, B1);

  // Inner probe: the harmonic vector compressed into the active subspace.
  Vec e_in(n);
  for (int i = 0; i < n; ++i) e_in[i] = 1.0 / double(i + 1);
  e_in -= B1 * (B1.adjoint() * e_in);
  if (e_in.norm() < 1e-8)
    throw ApproachFailure("inner probe vanished under compression");
  e_in.normalize();

  // Shift placement: scan spectral gaps of the base diagonal for zeros of
  // the inner Weyl function t -> <e,(C - t)^{-1} e>.
  std::vector<double> ds(n);
  for (int i = 0; i < n; ++i) ds[i] = C.d[i].real();
  std::sort(ds.begin(), ds.end(), std::greater<double>());
  auto Fw = [&](double t) {
    ShiftedSolver solver(C, cplx(t, 0.0));
    return e_in.dot(solver.solve(e_in)).real();
  };
  const int k_first = std::min(20, std::max(3, n / 6));
  std::vector<int> gaps{k_first};
  auto push_fraction = [&](double f) {
    int k = std::clamp(int(std::lround(f * n)), 1, n - 1);
    if (std::find(gaps.begin(), gaps.end(), k) == gaps.end()) gaps.push_back(k);
  };
  {
    const int ne = 10;
    const double lo = std::clamp(1.02 - 0.072 * ne, 0.28, 0.84);
    const double step = (0.96 - lo) / (ne - 2);
    for (int j = 0; j < ne - 1; ++j) {
      if (j == 0) push_fraction(std::max(0.12, lo - 0.5 * step));
      push_fraction(lo + j * step);
      if (j > 0) push_fraction(lo + (j - 0.5) * step);
    }
    // fallback candidates in case some gaps hold no zero
    for (double f : {0.25, 0.33, 0.41, 0.49, 0.57, 0.65, 0.73, 0.81, 0.89})
      push_fraction(f);
  }
  // The eigenvalues of C sit well away from the base diagonal: the
  // correction columns carry slowly decaying resolvent tails, so every bulk
  // eigenvalue is displaced by more than a local gap width.  Bracketing on
  // base-diagonal gaps therefore fails; instead sample the Weyl function on a
  // fine grid around each target gap and bracket upward sign changes (poles
  // only produce downward jumps).
  const double pole_margin = 4e-13 * std::max(1.0, C.d.cwiseAbs().maxCoeff());
  auto Fw_safe = [&](double t, bool& ok) {
    try {
      double v = Fw(t);
      ok = true;
      return v;
    } catch (const SingularResolvent&) {
      ok = false;
      return 0.0;
    }
  };
  std::vector<cplx> roots;
  for (int k : gaps) {
    if (int(roots.size()) >= 19) break;
    if (k < 2 || k > n - 3) continue;
    const double gap_w = ds[k - 1] - ds[k];
    if (!(gap_w > 4 * pole_margin)) continue;
    const double center = 0.5 * (ds[k - 1] + ds[k]);
    const double step = gap_w / 5.0;
    double best_a = 0, best_b = 0, best_fa = 0, best_fb = 0, best_d = 1e300;
    double prev_t = 0, prev_f = 0;
    bool have_prev = false;
    for (double t = ds[k + 2] + 0.5 * step; t < ds[k - 2]; t += step) {
      bool ok = false;
      double f = Fw_safe(t, ok);
      if (!ok) {
        have_prev = false;
        continue;
      }
      if (have_prev && prev_f < 0 && f > 0 &&
          std::abs(0.5 * (prev_t + t) - center) < best_d) {
        best_d = std::abs(0.5 * (prev_t + t) - center);
        best_a = prev_t;
        best_b = t;
        best_fa = prev_f;
        best_fb = f;
      }
      prev_t = t;
      prev_f = f;
      have_prev = true;
    }
    if (best_d == 1e300) continue;
    double r;
    try {
      r = root_illinois(Fw, best_a, best_b, best_fa, best_fb);
    } catch (const SingularResolvent&) {
      continue;
    }
    bool ok = false;
    double fr = Fw_safe(r, ok);
    // an upward jump at a negative-residue pole also brackets; reject it by
    // the residual magnitude at the converged point
    if (!ok || std::abs(fr) > 1.0 + 1e-3 * std::min(-best_fa, best_fb))
      continue;
    bool dup = false;
    for (const cplx& rr : roots)
      if (std::abs(rr.real() - r) < 0.25 * gap_w) dup = true;
    if (!dup) roots.emplace_back(r, 0.0);
  }
  if (int(roots.size()) < 8)
    throw ApproachFailure("inner stage found too few spectral-gap zeros");

  CaseTag tag0{CaseVariant::Case1, cplx(0, 0)};
  ApproachSequence seq_in = near_eigenvectors(C, tag0, roots, e_in);
  const int target = std::min(11, int(roots.size()) + 1);
  AlmostOrthogonalSystem sys_in =
      select_almost_orthogonal(seq_in, target, ideal, 1.0);
  orthonormalize(sys_in);
  SimilarityMap sim_in = build_similarity(sys_in);
  CoreMatrix core_in = assemble_core(C, sys_in, sim_in);
  HalfChoice choice_in = choose_halfspace(core_in, sys_in, ideal, epsilon);
  HalfSpaceDecomposition2x2 dec_in =
      decompose_2x2(C, sys_in, sim_in, choice_in, ideal, epsilon, tag0, 0);

  BlockForm3x3 form;
  form.tag = dec.tag;
  form.beta = dec.tag.beta;
  form.B1 = B1;
  form.B3 = dec_in.basis_M;
  form.K_inner = dec_in.K;
  form.inner_span = sys_in.span_dim;
  form.inner_riesz_lower = sys_in.riesz_lower;
  form.inner_riesz_upper = sys_in.riesz_upper;
  form.inner_max_offdiag = sys_in.max_offdiag;
  form.inner_lambdas = roots;
  const int q3 = int(form.B3.cols());
  if (q3 < 4) throw BudgetExhausted("third index set too small");
  if (n - q1 - q3 < 4) throw BudgetExhausted("middle index set too small");

  // Composite similarity: outer S, then the adjoint inverse of the inner one
  // (the inner pipeline decomposed the adjoint of the compressed block).
  form.Shat = compose(dec.sim.S, sim_in.S.adjoint_inverse());
  auto applyG = [&](const Vec& x) {
    return form.Shat.apply_inv(A.apply(form.Shat.apply(x)));
  };
  auto applyGadj = [&](const Vec& x) {
    ThinSimilarity Sia = form.Shat.adjoint_inverse();
    return Sia.apply_inv(A.apply_adjoint(Sia.apply(x)));
  };
  auto applyG_cols = [&](const Mat& X) {
    Mat Y(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) Y.col(c) = applyG(Vec(X.col(c)));
    return Y;
  };

  Mat GB1 = applyG_cols(form.B1);
  Mat GB3 = applyG_cols(form.B3);
  form.T11 = form.B1.adjoint() * GB1;
  form.R31 = form.B3.adjoint() * GB1;
  form.R21_emb = GB1 - form.B1 * form.T11 - form.B3 * form.R31;
  form.T13 = form.B1.adjoint() * GB3;
  form.T33 = form.B3.adjoint() * GB3;
  form.T23_emb = GB3 - form.B1 * form.T13 - form.B3 * form.T33;
  Mat row1(q1, n), row3(q3, n);
  for (int k = 0; k < q1; ++k)
    row1.row(k) = applyGadj(Vec(form.B1.col(k))).adjoint();
  for (int k = 0; k < q3; ++k)
    row3.row(k) = applyGadj(Vec(form.B3.col(k))).adjoint();
  form.T12_emb = row1 - (row1 * form.B1) * form.B1.adjoint() -
                 (row1 * form.B3) * form.B3.adjoint();
  form.R32_emb = row3 - (row3 * form.B1) * form.B1.adjoint() -
                 (row3 * form.B3) * form.B3.adjoint();
  // The interchange places the conjugate transpose of the inner (1,1) block
  // at position (3,3); the drift between the two computations is a cheap
  // end-to-end consistency certificate.
  form.adjoint_roundtrip = (form.T33 - Mat(dec_in.T11.adjoint())).norm();

  // Final normalization: a block similarity on M3 coordinates that makes T33
  // exactly diagonal when the interchange left any off-diagonal residue.
  double t33_off = 0.0;
  for (int i = 0; i < q3; ++i)
    for (int j = 0; j < q3; ++j)
      if (i != j) t33_off = std::max(t33_off, std::abs(form.T33(i, j)));
  if (t33_off > 1e-12) {
    Eigen::ComplexEigenSolver<Mat> es(form.T33);
    Mat W = es.eigenvectors();
    Mat Winv = W.inverse();
    form.T33 = Mat::Zero(q3, q3);
    for (int i = 0; i < q3; ++i) form.T33(i, i) = es.eigenvalues()[i];
    form.R31 = Winv * form.R31;
    form.R32_emb = Winv * form.R32_emb;
    form.T13 = form.T13 * W;
    form.T23_emb = form.T23_emb * W;
    ThinSimilarity S2;
    S2.P = form.B3 * (W - Mat::Identity(q3, q3));
    S2.Q = form.B3;
    S2.Pi = form.B3 * (Winv - Mat::Identity(q3, q3));
    S2.Qi = form.B3;
    form.Shat = compose(form.Shat, S2);
  }

  if (n <= dense_limit) {
    Mat B13(n, q1 + q3);
    B13 << form.B1, form.B3;
    Eigen::HouseholderQR<Mat> qr(B13);
    Mat Qfull = qr.householderQ();
    form.B2 = Qfull.rightCols(n - q1 - q3);
    form.T22 = form.B2->adjoint() * applyG_cols(*form.B2);
  }

  // Certificates.
  RankCert r21 = thin_rank(form.R21_emb), r31 = thin_rank(form.R31),
           r32 = thin_rank(form.R32_emb);
  form.rank_R21 = r21.rank;
  form.rank_R31 = r31.rank;
  form.rank_R32 = r32.rank;
  form.sv_R21 = r21.sv;
  form.sv_R31 = r31.sv;
  form.sv_R32 = r32.sv;
  form.norm_T11 = operator_norm(form.T11);
  form.norm_T33 = operator_norm(form.T33);
  form.ideal_T11 = matrix_ideal_norm(form.T11, ideal);
  form.ideal_T33 = matrix_ideal_norm(form.T33, ideal);
  form.offdiag_T11 = 0.0;
  for (int i = 0; i < q1; ++i)
    for (int j = 0; j < q1; ++j)
      if (i != j)
        form.offdiag_T11 = std::max(form.offdiag_T11, std::abs(form.T11(i, j)));
  form.offdiag_T33 = 0.0;
  for (int i = 0; i < q3; ++i)
    for (int j = 0; j < q3; ++j)
      if (i != j)
        form.offdiag_T33 = std::max(form.offdiag_T33, std::abs(form.T33(i, j)));
  form.op_norm_bound = structured_norm_bound(A);

  // Sampled consistency of the stored blocks against the conjugated operator.
  std::mt19937_64 rng(424242);
  std::normal_distribution<double> g;
  double res = 0.0;
  for (int t = 0; t < 64; ++t) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
    v.normalize();
    Vec c1 = form.B1.adjoint() * v, c3 = form.B3.adjoint() * v;
    Vec p2 = v - form.B1 * c1 - form.B3 * c3;
    Vec gv = applyG(v);
    res = std::max(res, (Vec(form.B1.adjoint() * gv) - form.T11 * c1 -
                         form.T12_emb * p2 - form.T13 * c3)
                            .norm());
    res = std::max(res, (Vec(form.B3.adjoint() * gv) - form.R31 * c1 -
                         form.R32_emb * p2 - form.T33 * c3)
                            .norm());
  }
  Mat GB1n = applyG_cols(form.B1);
  res = std::max(res, (GB1n - form.B1 * form.T11 - form.B3 * form.R31 -
                       form.R21_emb)
                          .norm());
  form.reassembly_residual = res;

  if (form.rank_R21 > 1 || form.rank_R31 > 1 || form.rank_R32 > 1)
    throw ConstructionError("a refined corner block exceeds rank 1");
  if (form.offdiag_T11 > 1e-10 || form.offdiag_T33 > 1e-10)
    throw ConstructionError("a refined diagonal block is not diagonal");
  if (form.norm_T11 >= epsilon || form.norm_T33 >= epsilon ||
      form.ideal_T11 >= epsilon || form.ideal_T33 >= epsilon)
    throw ConstructionError("refined block budgets violated");
  return form;
}

namespace {

BlockForm3x3 refine_nilpotent(const StructuredOp& A,
                              const HalfSpaceDecomposition2x2& dec,
                              const IdealSpec& ideal, double epsilon,
                              int dense_limit) {
  const int n = A.dim();
  BlockForm3x3 form;
  form.tag = dec.tag;
  form.beta = dec.tag.beta;
  form.B1 = dec.basis_M;
  const int q1 = int(form.B1.cols());
  if (q1 < 4) throw BudgetExhausted("first index set too small");
  // M3: every other vector of ker A^* (rows whose matrix row vanishes),
  // disjoint from M1 by construction (ker A is even, ker A^* odd coordinates).
  std::vector<int> zrows;
  for (int r = 0; r < n; ++r) {
    bool zero = A.d[r] == cplx(0, 0) &&
                (r == 0 || A.sub.size() == 0 || A.sub[r - 1] == cplx(0, 0));
    if (zero) zrows.push_back(r);
  }
  std::vector<int> m3;
  for (std::size_t i = 0; i < zrows.size(); i += 2) m3.push_back(zrows[i]);
  const int q3 = int(m3.size());
  if (q3 < 4) throw BudgetExhausted("third index set too small");
  if (n - q1 - q3 < 4) throw BudgetExhausted("middle index set too small");
  form.B3 = Mat::Zero(n, q3);
  for (int k = 0; k < q3; ++k) form.B3(m3[k], k) = 1.0;
  form.Shat = ThinSimilarity::identity(n);

  Mat GB1 = apply_cols(A, form.B1);
  Mat GB3 = apply_cols(A, form.B3);
  form.T11 = form.B1.adjoint() * GB1;
  form.R31 = form.B3.adjoint() * GB1;
  form.R21_emb = GB1 - form.B1 * form.T11 - form.B3 * form.R31;
  form.T13 = form.B1.adjoint() * GB3;
  form.T33 = form.B3.adjoint() * GB3;
  form.T23_emb = GB3 - form.B1 * form.T13 - form.B3 * form.T33;
  Mat row1 = apply_adjoint_cols(A, form.B1).adjoint();
  Mat row3 = apply_adjoint_cols(A, form.B3).adjoint();
  form.T12_emb = row1 - (row1 * form.B1) * form.B1.adjoint() -
                 (row1 * form.B3) * form.B3.adjoint();
  form.R32_emb = row3 - (row3 * form.B1) * form.B1.adjoint() -
                 (row3 * form.B3) * form.B3.adjoint();
  if (n <= dense_limit) {
    Mat B13(n, q1 + q3);
    B13 << form.B1, form.B3;
    Eigen::HouseholderQR<Mat> qr(B13);
    Mat Qfull = qr.householderQ();
    form.B2 = Qfull.rightCols(n - q1 - q3);
    form.T22 = form.B2->adjoint() * apply_cols(A, *form.B2);
  }
  RankCert r21 = thin_rank(form.R21_emb), r31 = thin_rank(form.R31),
           r32 = thin_rank(form.R32_emb);
  form.rank_R21 = r21.rank;
  form.rank_R31 = r31.rank;
  form.rank_R32 = r32.rank;
  form.sv_R21 = r21.sv;
  form.sv_R31 = r31.sv;
  form.sv_R32 = r32.sv;
  form.norm_T11 = operator_norm(form.T11);
  form.norm_T33 = operator_norm(form.T33);
  form.ideal_T11 = matrix_ideal_norm(form.T11, ideal);
  form.ideal_T33 = matrix_ideal_norm(form.T33, ideal);
  form.op_norm_bound = structured_norm_bound(A);
  form.reassembly_residual = 0.0;
  if (form.rank_R21 > 1 || form.rank_R31 > 1 || form.rank_R32 > 1)
    throw ConstructionError("nilpotent refinement yielded nonzero corners");
  if (form.norm_T11 >= epsilon || form.norm_T33 >= epsilon)
    throw ConstructionError("nilpotent refinement yielded nonzero diagonals");
  return form;
}

}  // namespace

DerivationCertificate derivation_certificate(const BlockForm3x3& form,
                                             const Mat& X) {
  if (!form.B2 || !form.T22)
    throw PreconditionError(
        "derivation certificate needs a materialized middle block");
  const int n = int(form.B1.rows());
  if (X.rows() != n || X.cols() != n)
    throw ConfigError("test operator dimension mismatch");
  const Mat& B1 = form.B1;
  const Mat& B2 = *form.B2;
  const Mat& B3 = form.B3;
  const int q1 = int(B1.cols()), q2 = int(B2.cols()), q3 = int(B3.cols());

  Mat X11 = B1.adjoint() * X * B1;
  Mat X21 = B2.adjoint() * X * B1;
  Mat X31 = B3.adjoint() * X * B1;
  Mat X32 = B3.adjoint() * X * B2;
  Mat X33 = B3.adjoint() * X * B3;
  Mat R21 = B2.adjoint() * form.R21_emb;
  Mat R32 = form.R32_emb * B2;

  DerivationCertificate cert;
  cert.A = form.T33 * X31 - X31 * form.T11;
  cert.F = form.R31 * X11 + R32 * X21 - X32 * R21 - X33 * form.R31;

  // Independent route: the (3,1) block of the full commutator in the
  // concatenated basis.
  Mat G = Mat::Zero(n, n);
  Mat T12 = form.T12_emb * B2;
  Mat T23 = B2.adjoint() * form.T23_emb;
  G.block(0, 0, q1, q1) = form.T11;
  G.block(0, q1, q1, q2) = T12;
  G.block(0, q1 + q2, q1, q3) = form.T13;
  G.block(q1, 0, q2, q1) = R21;
  G.block(q1, q1, q2, q2) = *form.T22;
  G.block(q1, q1 + q2, q2, q3) = T23;
  G.block(q1 + q2, 0, q3, q1) = form.R31;
  G.block(q1 + q2, q1, q3, q2) = R32;
  G.block(q1 + q2, q1 + q2, q3, q3) = form.T33;
  Mat Bfull(n, n);
  Bfull << B1, B2, B3;
  Mat Xb = Bfull.adjoint() * X * Bfull;
  Mat comm = G * Xb - Xb * G;
  cert.C31 = comm.block(q1 + q2, 0, q3, q1);

  cert.norm_X = operator_norm(X);
  cert.split_residual = (cert.C31 - (cert.F + cert.A)).norm();
  cert.split_tol = 1e-12 * cert.norm_X * std::max(1.0, form.op_norm_bound);
  RankCert rf = thin_rank(cert.F);
  cert.rank_F = rf.rank;
  cert.sv_C31 = singular_values(cert.C31);
  cert.sv_A = singular_values(cert.A);
  IdealSpec trace{IdealKind::trace, 1.0};
  cert.trace_A = sequence_norm(cert.sv_A, trace);
  cert.trace_bound = cert.norm_X * (form.ideal_T11 + form.ideal_T33);
  cert.kyfan_ok = true;
  for (std::size_t k = 0; k < cert.sv_C31.size(); ++k) {
    double lhs = k + 4 < cert.sv_C31.size() ? cert.sv_C31[k + 4] : 0.0;
    double rhs = (k < cert.sv_A.size() ? cert.sv_A[k] : 0.0) + 1e-10;
    if (lhs > rhs) cert.kyfan_ok = false;
  }
  cert.pass = cert.split_residual <= cert.split_tol && cert.rank_F <= 4 &&
              cert.trace_A <= cert.trace_bound + 1e-10 && cert.kyfan_ok;
  return cert;
}

}  // namespace halfspace
