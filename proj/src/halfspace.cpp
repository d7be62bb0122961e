#include "halfspace/halfspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace halfspace {

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

Mat hcat(const Mat& A, const Mat& B) {
  if (A.cols() == 0) return B;
  if (B.cols() == 0) return A;
  Mat C(A.rows(), A.cols() + B.cols());
  C << A, B;
  return C;
}

bool is_real_vec(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i].imag() != 0.0) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// ThinSimilarity
// ---------------------------------------------------------------------------

ThinSimilarity ThinSimilarity::identity(int n) {
  ThinSimilarity s;
  s.P = s.Q = s.Pi = s.Qi = Mat(n, 0);
  return s;
}

ThinSimilarity ThinSimilarity::from_forward(const Mat& P, const Mat& Q) {
  ThinSimilarity s;
  s.P = P;
  s.Q = Q;
  const int r = int(P.cols());
  Mat small = Mat::Identity(r, r) + Q.adjoint() * P;
  Eigen::PartialPivLU<Mat> lu(small);
  s.Pi = -(P * lu.solve(Mat::Identity(r, r)));
  s.Qi = Q;
  return s;
}

Vec ThinSimilarity::apply(const Vec& x) const {
  if (P.cols() == 0) return x;
  return x + P * (Q.adjoint() * x);
}

Vec ThinSimilarity::apply_inv(const Vec& x) const {
  if (Pi.cols() == 0) return x;
  return x + Pi * (Qi.adjoint() * x);
}

Mat ThinSimilarity::apply(const Mat& X) const {
  if (P.cols() == 0) return X;
  return X + P * (Q.adjoint() * X);
}

Mat ThinSimilarity::apply_inv(const Mat& X) const {
  if (Pi.cols() == 0) return X;
  return X + Pi * (Qi.adjoint() * X);
}

ThinSimilarity ThinSimilarity::adjoint_inverse() const {
  ThinSimilarity s;
  s.P = Qi;
  s.Q = Pi;
  s.Pi = Q;
  s.Qi = P;
  return s;
}

Mat ThinSimilarity::dense(int n) const {
  Mat M = Mat::Identity(n, n);
  if (P.cols() > 0) M.noalias() += P * Q.adjoint();
  return M;
}

double ThinSimilarity::inverse_defect() const {
  if (P.cols() == 0 && Pi.cols() == 0) return 0.0;
  // S S^{-1} - I = P Q^* + (Pi + P (Q^* Pi)) Qi^*.
  Mat left = hcat(P, Pi + P * (Q.adjoint() * Pi));
  Mat right = hcat(Q, Qi);
  return thin_product_norm(left, right);
}

ThinSimilarity compose(const ThinSimilarity& a, const ThinSimilarity& b) {
  ThinSimilarity s;
  s.P = hcat(a.P, b.P + a.P * (a.Q.adjoint() * b.P));
  s.Q = hcat(a.Q, b.Q);
  s.Pi = hcat(b.Pi, a.Pi + b.Pi * (b.Qi.adjoint() * a.Pi));
  s.Qi = hcat(b.Qi, a.Qi);
  return s;
}

double thin_product_norm(const Mat& P, const Mat& Q) {
  if (P.cols() == 0) return 0.0;
  Eigen::HouseholderQR<Mat> qp(P), qq(Q);
  const int r = int(P.cols());
  Mat Rp = qp.matrixQR().topRows(std::min<Eigen::Index>(P.rows(), r));
  Mat Rq = qq.matrixQR().topRows(std::min<Eigen::Index>(Q.rows(), r));
  Mat Rpu = Mat(Rp.triangularView<Eigen::Upper>());
  Mat Rqu = Mat(Rq.triangularView<Eigen::Upper>());
  return operator_norm(Rpu * Rqu.adjoint());
}

StructuredOp conjugate_structured(const StructuredOp& A,
                                  const ThinSimilarity& S) {
  StructuredOp out = A;
  if (S.P.cols() == 0 && S.Pi.cols() == 0) return out;
  Mat AP = apply_cols(A, S.P);
  out.add_lowrank(AP + S.Pi * (S.Qi.adjoint() * AP), S.Q);
  out.add_lowrank(S.Pi, apply_adjoint_cols(A, S.Qi));
  return out;
}

double structured_norm_bound(const StructuredOp& A) {
  double b = A.d.size() ? A.d.cwiseAbs().maxCoeff() : 0.0;
  if (A.sub.size()) b += A.sub.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < A.U.cols(); ++k)
    b += A.U.col(k).norm() * A.V.col(k).norm();
  return b;
}

// ---------------------------------------------------------------------------
// near_eigenvectors
// ---------------------------------------------------------------------------

namespace {

// Quad-precision root of F(t) = sum_j w_j^2 / (d_j - t) inside the gap of the
// diagonal values that contains t0; falls back to t0 when no sign change.
qreal refine_weyl_zero(const qvec& d, const qvec& w2, double t0) {
  qreal lo = -HUGE_VALQ, hi = HUGE_VALQ;
  for (qreal v : d) {
    if (v < t0 && v > lo) lo = v;
    if (v > t0 && v < hi) hi = v;
  }
  if (lo == -HUGE_VALQ || hi == HUGE_VALQ) return qreal(t0);
  auto F = [&](qreal t) {
    qreal s = 0;
    for (std::size_t j = 0; j < d.size(); ++j) s += w2[j] / (d[j] - t);
    return s;
  };
  qreal width = hi - lo;
  qreal a = lo + width * qreal(1e-25), b = hi - width * qreal(1e-25);
  if (!(F(a) < 0 && F(b) > 0)) return qreal(t0);
  for (int it = 0; it < 260; ++it) {
    qreal m = (a + b) / 2;
    if (m == a || m == b) break;
    (F(m) < 0 ? a : b) = m;
  }
  return (a + b) / 2;
}

}  // namespace

ApproachSequence near_eigenvectors(const StructuredOp& A, const CaseTag& tag,
                                   const std::vector<cplx>& lambdas,
                                   const Vec& probe) {
  if (std::abs(probe.norm() - 1.0) > 1e-12)
    throw PreconditionError("probe must be a unit vector");
  if (lambdas.empty()) throw PreconditionError("empty approach sequence");
  const int n = A.dim();
  const int m = int(lambdas.size());
  ApproachSequence seq;
  seq.beta = tag.beta;
  seq.lambdas = lambdas;
  seq.probe = probe;
  seq.vectors.resize(n, m);
  seq.alphas.resize(m);
  seq.residuals.resize(m);
  seq.kappas.resize(m);
  const double bound = std::max(1e-300, structured_norm_bound(A));

  bool real_diag = A.sub.size() == 0 && A.U.cols() == 0 && is_real_vec(A.d) &&
                   is_real_vec(probe);
  for (cplx l : lambdas) real_diag = real_diag && l.imag() == 0.0;

  if (real_diag) {
    qvec d(n), w(n), w2(n);
    for (int i = 0; i < n; ++i) {
      d[i] = A.d[i].real();
      w[i] = probe[i].real();
      w2[i] = w[i] * w[i];
    }
    seq.qprobe = w;
    for (int k = 0; k < m; ++k) {
      qreal ql = refine_weyl_zero(d, w2, lambdas[k].real());
      qvec x(n);
      double mind = 1e300, maxd = 0.0;
      for (int i = 0; i < n; ++i) {
        qreal den = d[i] - ql;
        if (qabs(den) == 0) throw SingularResolvent("shift hits a diagonal value");
        x[i] = w[i] / den;
        double ad = double(qabs(den));
        mind = std::min(mind, ad);
        maxd = std::max(maxd, ad);
      }
      qreal nx = qnorm(x);
      if (nx == 0) throw SingularResolvent("zero resolvent image");
      qreal alpha = qreal(1) / nx;
      qscale(x, alpha);
      // residual of (d_i - ql) h_i - alpha w_i, exact up to quad rounding
      qreal r2 = 0;
      for (int i = 0; i < n; ++i) {
        qreal ri = (d[i] - ql) * x[i] - alpha * w[i];
        r2 += ri * ri;
      }
      seq.qlambdas.push_back(ql);
      seq.qalphas.push_back(alpha);
      seq.qvectors.push_back(x);
      seq.lambdas[k] = cplx(double(ql), 0.0);
      seq.alphas[k] = double(alpha);
      for (int i = 0; i < n; ++i) seq.vectors(i, k) = cplx(double(x[i]), 0.0);
      seq.residuals[k] = double(sqrtq(r2));
      seq.kappas[k] = maxd / mind;
      if (seq.residuals[k] > 1e-6 * bound)
        throw ConstructionError("near-eigenvector residual exceeds 1e-6*||A||");
    }
    return seq;
  }

  for (int k = 0; k < m; ++k) {
    ShiftedSolver solver(A, lambdas[k]);
    Vec x = solver.solve(probe);
    double nx = x.norm();
    if (nx == 0) throw SingularResolvent("zero resolvent image");
    double alpha = 1.0 / nx;
    Vec h = alpha * x;
    seq.alphas[k] = alpha;
    seq.vectors.col(k) = h;
    seq.kappas[k] = solver.kappa_estimate();
    seq.residuals[k] = (A.apply(h) - lambdas[k] * h - alpha * probe).norm();
    if (seq.residuals[k] > 1e-6 * bound)
      throw ConstructionError("near-eigenvector residual exceeds 1e-6*||A||");
  }
  return seq;
}

// ---------------------------------------------------------------------------
// select_almost_orthogonal / riesz / orthonormalize
// ---------------------------------------------------------------------------

AlmostOrthogonalSystem select_almost_orthogonal(const ApproachSequence& seq,
                                                int target_size,
                                                const IdealSpec& ideal,
                                                double alpha_budget) {
  if (target_size < 6)
    throw PreconditionError("target system size must be >= 6");
  const int n = int(seq.vectors.rows());
  const int cand_count = int(seq.lambdas.size());
  AlmostOrthogonalSystem sys;
  const bool quad = seq.has_quad();

  std::vector<int> accepted;  // candidate indices for positions 2..m
  if (quad) {
    sys.l_quad.push_back(seq.qprobe);
    for (int c = 0; c < cand_count && 1 + int(accepted.size()) < target_size;
         ++c) {
      const qvec& cand = seq.qvectors[c];
      const int pos = 2 + int(accepted.size());  // 1-based position if accepted
      bool ok = true;
      for (std::size_t j = 0; j < sys.l_quad.size() && ok; ++j) {
        qreal thr = powq(qreal(4), -qreal(int(j) + 1 + pos));
        if (qabs(qdot(sys.l_quad[j], cand)) >= thr) ok = false;
      }
      if (ok) {
        sys.l_quad.push_back(cand);
        accepted.push_back(c);
      }
    }
  } else {
    std::vector<Vec> ls;
    ls.push_back(seq.probe);
    for (int c = 0; c < cand_count && 1 + int(accepted.size()) < target_size;
         ++c) {
      Vec cand = seq.vectors.col(c);
      const int pos = 2 + int(accepted.size());
      bool ok = true;
      for (std::size_t j = 0; j < ls.size() && ok; ++j) {
        double thr = std::pow(4.0, -double(int(j) + 1 + pos));
        if (std::abs(ls[j].dot(cand)) >= thr) ok = false;
      }
      if (ok) {
        ls.push_back(cand);
        accepted.push_back(c);
      }
    }
  }

  const int msel = 1 + int(accepted.size());
  if (msel < target_size)
    throw SelectionExhausted(
        "selected only " + std::to_string(msel) + " of " +
        std::to_string(target_size) +
        " almost-orthogonal vectors; a larger truncation dim or a longer "
        "approach sequence is needed");

  sys.selected = accepted;
  sys.span_dim = msel;
  sys.l.resize(n, msel);
  sys.l.col(0) = seq.probe;
  sys.lambdas.assign(msel, cplx(0, 0));
  sys.alphas.assign(msel, 0.0);
  for (int k = 0; k < int(accepted.size()); ++k) {
    sys.l.col(k + 1) = seq.vectors.col(accepted[k]);
    sys.lambdas[k + 1] = seq.lambdas[accepted[k]];
    sys.alphas[k + 1] = seq.alphas[accepted[k]];
  }

  sys.gram.resize(msel, msel);
  sys.max_offdiag = 0.0;
  for (int i = 0; i < msel; ++i) {
    for (int j = 0; j < msel; ++j) {
      cplx g;
      if (quad)
        g = cplx(double(qdot(sys.l_quad[i], sys.l_quad[j])), 0.0);
      else
        g = sys.l.col(i).dot(sys.l.col(j));
      sys.gram(i, j) = g;
      if (i != j) sys.max_offdiag = std::max(sys.max_offdiag, std::abs(g));
    }
  }

  std::vector<double> al(sys.alphas.begin() + 1, sys.alphas.end());
  sys.alpha_cert = certify_membership(al, ideal, alpha_budget);
  sys.alpha_sq_sum = 0.0;
  for (double a : al) sys.alpha_sq_sum += a * a;
  return sys;
}

std::pair<double, double> riesz_certificate(const AlmostOrthogonalSystem& sys) {
  if (sys.span_dim == 0) throw PreconditionError("empty system");
  Mat H = 0.5 * (sys.gram + sys.gram.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0)
    throw ConstructionError("Gram matrix is not positive definite");
  return {lo, hi};
}

void orthonormalize(AlmostOrthogonalSystem& sys) {
  auto [lo, hi] = riesz_certificate(sys);
  sys.riesz_lower = lo;
  sys.riesz_upper = hi;
  const int m = sys.span_dim;
  const int n = int(sys.l.rows());
  sys.f.resize(n, m);
  if (!sys.l_quad.empty()) {
    std::vector<qvec> fq(sys.l_quad);
    for (int k = 0; k < m; ++k) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < k; ++j) qaxpy(fq[k], qdot(fq[j], fq[k]), fq[j]);
      }
      if (k > 0) qscale(fq[k], qreal(1) / qnorm(fq[k]));
      // k = 0 stays the probe itself (f_1 = e exactly).
    }
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < n; ++i) sys.f(i, k) = cplx(double(fq[k][i]), 0.0);
    sys.f.col(0) = sys.l.col(0);
    return;
  }
  for (int k = 0; k < m; ++k) {
    Vec v = sys.l.col(k);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < k; ++j)
        v -= sys.f.col(j).dot(v) * sys.f.col(j);
    double nv = v.norm();
    if (k > 0 && nv < 1e-8)
      throw NumericalFailure("orthogonalization collapsed a basis vector");
    sys.f.col(k) = k == 0 ? Vec(sys.l.col(0)) : Vec(v / nv);
  }
}

// ---------------------------------------------------------------------------
// build_similarity / assemble_core / choose_halfspace
// ---------------------------------------------------------------------------

SimilarityMap build_similarity(const AlmostOrthogonalSystem& sys) {
  if (sys.f.cols() != sys.span_dim)
    throw PreconditionError("orthonormalize must run before build_similarity");
  SimilarityMap sm;
  sm.F = sys.f;
  sm.L = sys.l;
  sm.S = ThinSimilarity::from_forward(sm.L - sm.F, sm.F);
  Eigen::BDCSVD<Mat> svd(sm.L);
  sm.sigma_min = svd.singularValues().minCoeff();
  sm.sigma_max = svd.singularValues().maxCoeff();
  if (sm.sigma_min < std::sqrt(43.0 / 45.0) / 2.0)
    throw ConstructionError("similarity is numerically non-invertible on M'");
  sm.inv_defect = sm.S.inverse_defect();
  sm.map_residual = 0.0;
  Mat SF = sm.S.apply(sm.F);
  for (int k = 0; k < sys.span_dim; ++k)
    sm.map_residual =
        std::max(sm.map_residual, (SF.col(k) - sm.L.col(k)).norm());
  std::mt19937_64 rng(771155);
  std::normal_distribution<double> g;
  Vec x(sm.F.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = cplx(g(rng), g(rng));
  x -= sm.F * (sm.F.adjoint() * x);
  if (x.norm() > 0) x.normalize();
  sm.offspace_residual = (sm.S.apply(x) - x).norm();
  return sm;
}

CoreMatrix assemble_core(const StructuredOp& A,
                         const AlmostOrthogonalSystem& sys,
                         const SimilarityMap& sim) {
  const int m = sys.span_dim;
  CoreMatrix core;
  Mat W = apply_cols(A, sim.L);               // A S f_k = A l_k
  Mat X = sim.F * (sim.F.adjoint() * W);      // P_{M'} ...
  Mat Y = sim.S.apply_inv(X);                 // S^{-1} ...
  core.G = sim.F.adjoint() * Y;
  core.diag.resize(m);
  core.first_row.resize(m);
  core.off_pattern = 0.0;
  for (int j = 0; j < m; ++j) {
    core.diag[j] = core.G(j, j);
    core.first_row[j] = core.G(0, j);
    for (int i = 0; i < m; ++i)
      if (i != j && i != 0 && j != 0)
        core.off_pattern = std::max(core.off_pattern, std::abs(core.G(i, j)));
  }
  Vec Ae = A.apply(Vec(sim.L.col(0)));
  Vec Pae = sim.F * (sim.F.adjoint() * Ae);
  Mat gram = sim.L.adjoint() * sim.L;
  core.beta_coeffs = Eigen::PartialPivLU<Mat>(gram).solve(sim.L.adjoint() * Pae);
  core.beta_residual = (sim.L * core.beta_coeffs - Pae).norm();
  core.op_norm_bound = structured_norm_bound(A);
  if (core.off_pattern > 1e-6 * std::max(1e-300, core.op_norm_bound))
    throw ConstructionError("core matrix violates the sparsity pattern");
  if (core.beta_residual > 1e-9)
    throw ConstructionError("first-column coefficients fail to reproduce P Te");
  return core;
}

HalfChoice choose_halfspace(const CoreMatrix& core,
                            const AlmostOrthogonalSystem& sys,
                            const IdealSpec& ideal, double epsilon) {
  const int m = sys.span_dim;
  // Even 1-based positions 2k -> 0-based column 2k-1.
  std::vector<int> even_cols;
  for (int p = 2; p <= m; p += 2) even_cols.push_back(p - 1);
  const int P = int(even_cols.size());
  for (int K = 1; K <= P; ++K) {
    std::vector<double> lam, alp;
    for (int k = K; k <= P; ++k) {
      lam.push_back(std::abs(core.diag[even_cols[k - 1]]));
      alp.push_back(sys.alphas[even_cols[k - 1]]);
    }
    double sup = *std::max_element(lam.begin(), lam.end());
    double inorm = sequence_norm(lam, ideal);
    double a2 = 0.0;
    for (double a : alp) a2 += a * a;
    a2 = std::sqrt(a2);
    if (sup < epsilon && inorm < epsilon && a2 < epsilon) {
      HalfChoice out;
      out.K = K;
      out.M_cols.assign(even_cols.begin() + (K - 1), even_cols.end());
      return out;
    }
  }
  throw BudgetExhausted(
      "no cutoff K meets the epsilon budgets; a larger system is needed");
}

// ---------------------------------------------------------------------------
// decompose_2x2 and case branches
// ---------------------------------------------------------------------------

namespace {

BlockCerts certify_blocks(const Mat& T11, const Mat& R_emb, const Vec& f1,
                          const IdealSpec& ideal, int dim) {
  BlockCerts c;
  c.dim_M = int(T11.rows());
  c.dim_Mperp = dim - c.dim_M;
  c.norm_T11 = operator_norm(T11);
  c.ideal_T11 = matrix_ideal_norm(T11, ideal);
  c.t11_offdiag = 0.0;
  for (int i = 0; i < T11.rows(); ++i)
    for (int j = 0; j < T11.cols(); ++j)
      if (i != j) c.t11_offdiag = std::max(c.t11_offdiag, std::abs(T11(i, j)));
  Eigen::BDCSVD<Mat> svd(R_emb, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  c.sv_R.assign(s.data(), s.data() + s.size());
  c.norm_R = c.sv_R.empty() ? 0.0 : c.sv_R[0];
  c.ideal_R = sequence_norm(c.sv_R, ideal);
  c.rank_R = 0;
  for (double v : c.sv_R)
    if (c.norm_R > 0 && v > 1e-8 * c.norm_R) ++c.rank_R;
  c.r_direction_overlap =
      c.norm_R > 0 ? std::abs(f1.dot(Vec(svd.matrixU().col(0)))) : 1.0;
  return c;
}

}  // namespace

HalfSpaceDecomposition2x2 decompose_2x2(const StructuredOp& A,
                                        const AlmostOrthogonalSystem& sys,
                                        const SimilarityMap& sim,
                                        const HalfChoice& choice,
                                        const IdealSpec& ideal, double epsilon,
                                        const CaseTag& tag, int dense_limit) {
  const int n = A.dim();
  const int q = int(choice.M_cols.size());
  if (q == 0) throw PreconditionError("empty half-space index set");
  HalfSpaceDecomposition2x2 dec;
  dec.tag = tag;
  dec.K = choice.K;
  dec.M_cols = choice.M_cols;
  dec.sim = sim;
  dec.basis_M.resize(n, q);
  Mat LM(n, q);
  for (int k = 0; k < q; ++k) {
    dec.basis_M.col(k) = sim.F.col(choice.M_cols[k]);
    LM.col(k) = sim.L.col(choice.M_cols[k]);
  }
  Mat Y = sim.S.apply_inv(apply_cols(A, LM));  // S^{-1} A S b_k
  dec.T11 = dec.basis_M.adjoint() * Y;
  dec.R_emb = Y - dec.basis_M * dec.T11;
  dec.certs = certify_blocks(dec.T11, dec.R_emb, Vec(sim.F.col(0)), ideal, n);
  dec.t11_lambdas.resize(q);
  for (int k = 0; k < q; ++k) dec.t11_lambdas[k] = dec.T11(k, k);

  // Row block: B_M^* (S^{-1} A S) restricted to M-perp, embedded as q x N.
  ThinSimilarity Sia = sim.S.adjoint_inverse();
  Mat Z(n, q);  // (S^{-1} A S)^* b_k = S^* A^* S^{-*} b_k
  for (int k = 0; k < q; ++k)
    Z.col(k) = Sia.apply_inv(A.apply_adjoint(Sia.apply(Vec(dec.basis_M.col(k)))));
  Mat row = Z.adjoint();  // q x N
  dec.T12_emb = row - (row * dec.basis_M) * dec.basis_M.adjoint();

  if (n <= dense_limit) {
    // Explicit complement basis: leftover f columns, then the orthogonal
    // complement of M' from a full QR of F.
    const int m = sys.span_dim;
    std::vector<int> rest;
    for (int c = 0; c < m; ++c)
      if (std::find(choice.M_cols.begin(), choice.M_cols.end(), c) ==
          choice.M_cols.end())
        rest.push_back(c);
    Eigen::HouseholderQR<Mat> qr(sim.F);
    Mat Qfull = qr.householderQ();
    Mat Bp(n, n - q);
    for (int k = 0; k < int(rest.size()); ++k) Bp.col(k) = sim.F.col(rest[k]);
    Bp.rightCols(n - m) = Qfull.rightCols(n - m);
    Mat ABp = sim.S.apply_inv(apply_cols(A, sim.S.apply(Bp)));
    dec.T22 = Bp.adjoint() * ABp;
    dec.basis_Mperp = Bp;
  }

  if (dec.certs.rank_R > 1)
    throw ConstructionError("corner block rank exceeds 1");
  if (dec.certs.t11_offdiag > 1e-10)
    throw ConstructionError("T11 is not diagonal");
  if (dec.certs.norm_T11 >= epsilon || dec.certs.norm_R >= epsilon)
    throw ConstructionError("operator-norm budget violated");
  if (dec.certs.ideal_T11 >= epsilon || dec.certs.ideal_R >= epsilon)
    throw ConstructionError("ideal-norm budget violated");
  return dec;
}

namespace {

Mat embed_rows(const Mat& X, const std::vector<int>& rows, int n) {
  Mat Y = Mat::Zero(n, X.cols());
  for (int r = 0; r < int(rows.size()); ++r) Y.row(rows[r]) = X.row(r);
  return Y;
}

}  // namespace

HalfSpaceDecomposition2x2 decompose_case2(const OperatorSpec& spec,
                                          const TruncatedOperator& T,
                                          const IdealSpec& ideal,
                                          double epsilon, int count) {
  CaseTag tag = select_beta(spec);
  if (tag.variant != CaseVariant::Case2)
    throw PreconditionError("decompose_case2 requires a Case2 spec");
  if (spec.effective_family() != Family::diagonal ||
      spec.rule.kind != SequenceRule::Kind::zero_even_one_over_n_odd ||
      !spec.perturbations.empty())
    throw OracleIncomplete(
        "Case 2 embedding is implemented for the basis-eigenvector diagonal "
        "family only");
  const int n = T.dim;
  // Eigenvalues 1/(2k-1) on the odd coordinates accumulate at beta = 0.
  std::vector<int> rows;
  for (int r = 0; r < n; r += 2) rows.push_back(r);
  const int nr = int(rows.size());
  OperatorSpec rspec;
  rspec.family = Family::diagonal;
  rspec.rule.kind = SequenceRule::Kind::one_over_2n_minus_1;
  TruncatedOperator Tr = build_truncation(rspec, nr);
  CaseTag rtag{CaseVariant::Case1, cplx(0, 0)};
  auto lambdas = generate_approach(rspec, rtag, ideal, count, 0.5, nr);
  auto [probe, growth] = select_probe(Tr, lambdas);
  (void)growth;
  StructuredOp Ar = structured_form(Tr);
  ApproachSequence seq = near_eigenvectors(Ar, rtag, lambdas, probe);
  AlmostOrthogonalSystem sys =
      select_almost_orthogonal(seq, count + 1, ideal, 1.0);
  orthonormalize(sys);
  // Embed the system into the full space; the restriction is self-adjoint so
  // the adjoint round-trip of the compressed block is the block itself.
  AlmostOrthogonalSystem fsys = sys;
  fsys.l = embed_rows(sys.l, rows, n);
  fsys.f = embed_rows(sys.f, rows, n);
  if (!sys.l_quad.empty()) {
    fsys.l_quad.clear();
    for (const qvec& v : sys.l_quad) {
      qvec w(n, qreal(0));
      for (int r = 0; r < nr; ++r) w[rows[r]] = v[r];
      fsys.l_quad.push_back(std::move(w));
    }
  }
  SimilarityMap sim = build_similarity(fsys);
  StructuredOp A = structured_form(T);  // beta = 0
  CoreMatrix core = assemble_core(A, fsys, sim);
  HalfChoice choice = choose_halfspace(core, fsys, ideal, epsilon);
  HalfSpaceDecomposition2x2 dec =
      decompose_2x2(A, fsys, sim, choice, ideal, epsilon, tag);
  dec.tag = tag;
  return dec;
}

HalfSpaceDecomposition2x2 decompose_case3(const OperatorSpec& spec,
                                          const TruncatedOperator& T,
                                          const IdealSpec& ideal,
                                          double epsilon) {
  if (spec.effective_family() != Family::nilpotent_pair)
    throw PreconditionError("decompose_case3 requires the nilpotent family");
  const int n = T.dim;
  // Kernel contains the even coordinates; M is every other kernel vector
  // (the even positions of the kernel list), so dim M and codim M both grow.
  std::vector<int> kernel;
  for (int r = 1; r < n; r += 2) kernel.push_back(r);
  std::vector<int> mrows;
  for (std::size_t i = 1; i < kernel.size(); i += 2) mrows.push_back(kernel[i]);
  if (mrows.empty()) throw BudgetExhausted("truncation too small for Case 3");
  const int q = int(mrows.size());
  HalfSpaceDecomposition2x2 dec;
  dec.tag = CaseTag{CaseVariant::Case3Nilpotent, cplx(0, 0)};
  dec.K = 1;
  dec.basis_M = Mat::Zero(n, q);
  for (int k = 0; k < q; ++k) dec.basis_M(mrows[k], k) = 1.0;
  for (int k = 0; k < q; ++k) dec.M_cols.push_back(k);
  StructuredOp A = structured_form(T);
  Mat Y = apply_cols(A, dec.basis_M);  // = 0 exactly: M is inside the kernel
  dec.T11 = dec.basis_M.adjoint() * Y;
  dec.R_emb = Y - dec.basis_M * dec.T11;
  dec.certs =
      certify_blocks(dec.T11, dec.R_emb, Vec(dec.basis_M.col(0)), ideal, n);
  Mat row = apply_adjoint_cols(A, dec.basis_M).adjoint();
  dec.T12_emb = row - (row * dec.basis_M) * dec.basis_M.adjoint();
  dec.t11_lambdas.assign(q, cplx(0, 0));
  SimilarityMap sim;
  sim.F = sim.L = dec.basis_M;
  sim.S = ThinSimilarity::identity(n);
  sim.sigma_min = sim.sigma_max = 1.0;
  dec.sim = sim;
  if (dec.certs.norm_T11 >= epsilon || dec.certs.norm_R >= epsilon)
    throw ConstructionError("nilpotent case yielded nonzero blocks");
  return dec;
}

// ---------------------------------------------------------------------------
// oblique_form / equivalence_replace
// ---------------------------------------------------------------------------

ObliqueDecomposition oblique_form(const StructuredOp& A,
                                  const HalfSpaceDecomposition2x2& dec) {
  const int n = A.dim();
  const int q = int(dec.basis_M.cols());
  ObliqueDecomposition ob;
  ob.W1 = dec.sim.S.apply(dec.basis_M);
  ob.W2 = dec.sim.S.adjoint_inverse().apply(dec.basis_M);
  Mat AW1 = apply_cols(A, ob.W1);
  ob.That11 = ob.W2.adjoint() * AW1;
  ob.Rhat_emb = AW1 - ob.W1 * ob.That11;
  Mat delta = ob.W2.adjoint() * ob.W1 - Mat::Identity(q, q);
  ob.idem_defect = thin_product_norm(ob.W1 * delta, ob.W2);
  if (ob.idem_defect > 1e-6)
    throw NumericalFailure("oblique projection fails idempotency");
  Eigen::BDCSVD<Mat> svd(ob.Rhat_emb);
  const auto& s = svd.singularValues();
  ob.sv_Rhat.assign(s.data(), s.data() + s.size());
  ob.rank_Rhat = 0;
  for (double v : ob.sv_Rhat)
    if (!ob.sv_Rhat.empty() && ob.sv_Rhat[0] > 0 && v > 1e-8 * ob.sv_Rhat[0])
      ++ob.rank_Rhat;
  Mat row = apply_adjoint_cols(A, ob.W2).adjoint();  // W2^* A as q x N
  ob.That12_emb = row - ob.That11 * ob.W2.adjoint();
  Eigen::ComplexEigenSolver<Mat> e1(ob.That11), e2(dec.T11);
  double worst = 0.0;
  for (int i = 0; i < q; ++i) {
    double best = 1e300, best2 = 1e300;
    for (int j = 0; j < q; ++j) {
      best = std::min(best, std::abs(e1.eigenvalues()[i] - e2.eigenvalues()[j]));
      best2 =
          std::min(best2, std::abs(e2.eigenvalues()[i] - e1.eigenvalues()[j]));
    }
    worst = std::max(worst, std::max(best, best2));
  }
  ob.spectra_match = worst;
  return ob;
}

EquivalenceResult equivalence_replace(const Mat& T12, EquivalenceMode mode,
                                      double delta) {
  if (T12.rows() != T12.cols())
    throw PreconditionError(
        "equivalence replacement needs a square block (kernel/cokernel "
        "dimensions must agree at truncation scale)");
  const int n = int(T12.rows());
  Eigen::BDCSVD<Mat> svd(T12, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  EquivalenceResult out;
  if (mode == EquivalenceMode::psd_diagonal) {
    out.S1 = svd.matrixU().adjoint();
    out.S2 = svd.matrixV();
    out.B = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) out.B(i, i) = s[i];
    out.cond_S1 = out.cond_S2 = 1.0;
    return out;
  }
  double smax = n > 0 ? s[0] : 0.0;
  double gap = delta > 0 ? delta : 1e-4 * smax;
  double ztol = 1e-8 * smax;
  Eigen::VectorXd D = Eigen::VectorXd::Ones(n);
  out.B = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (s[i] > gap) {
      D[i] = s[i];
      out.B(i, i) = 1.0;
    } else if (s[i] > ztol) {
      throw RangeNotClosed(
          "singular values fall inside the declared range gap");
    }
  }
  out.S1 = D.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
  out.S2 = svd.matrixV();
  out.cond_S1 = D.maxCoeff() / D.minCoeff();
  out.cond_S2 = 1.0;
  return out;
}

}  // namespace halfspace
