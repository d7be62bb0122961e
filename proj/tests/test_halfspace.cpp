#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halfspace/halfspace.hpp"

using namespace halfspace;

namespace {

std::mt19937_64 rng(41);
std::normal_distribution<double> g;

Vec rand_unit(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  v.normalize();
  return v;
}

Mat rand_mat(int n, int m) {
  Mat M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = cplx(g(rng), g(rng));
  return M;
}

Mat rand_invertible(int n) {
  // unitary * diag(0.5..2) * unitary: condition number at most 4
  Eigen::HouseholderQR<Mat> q1(rand_mat(n, n)), q2(rand_mat(n, n));
  Mat U = q1.householderQ(), V = q2.householderQ();
  Mat D = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) D(i, i) = 0.5 + 1.5 * double(i) / double(n - 1);
  return U * D * V;
}

StructuredOp diag_op(std::initializer_list<double> vals) {
  StructuredOp A;
  A.d.resize(Eigen::Index(vals.size()));
  int i = 0;
  for (double v : vals) A.d[i++] = v;
  return A;
}

OperatorSpec diag_spec() { return OperatorSpec{}; }

// Shared full-chain artifacts on the diagonal family at N = 256.
struct Chain {
  TruncatedOperator T;
  StructuredOp A;
  AlmostOrthogonalSystem sys;
  SimilarityMap sim;
  HalfSpaceDecomposition2x2 dec;
};

const Chain& chain256() {
  static Chain* c = [] {
    Chain* out = new Chain;
    IdealSpec tr{IdealKind::trace, 1.0};
    CaseTag tag = select_beta(diag_spec());
    out->T = build_truncation(diag_spec(), 256);
    out->A = structured_form(out->T);
    auto lambdas = generate_approach(diag_spec(), tag, tr, 9, 0.5, 256);
    auto [probe, growth] = select_probe(out->T, lambdas);
    (void)growth;
    ApproachSequence seq = near_eigenvectors(out->A, tag, lambdas, probe);
    out->sys = select_almost_orthogonal(seq, 10, tr, 1.0);
    orthonormalize(out->sys);
    out->sim = build_similarity(out->sys);
    CoreMatrix core = assemble_core(out->A, out->sys, out->sim);
    HalfChoice choice = choose_halfspace(core, out->sys, tr, 0.05);
    out->dec = decompose_2x2(out->A, out->sys, out->sim, choice, tr, 0.05, tag);
    return out;
  }();
  return *c;
}

}  // namespace

TEST_CASE("thin similarity: apply, inverse, composition, adjoint inverse") {
  const int n = 20, r = 3;
  Mat P = 0.3 * rand_mat(n, r), Q = rand_mat(n, r);
  ThinSimilarity S = ThinSimilarity::from_forward(P, Q);
  Mat D = S.dense(n);
  CHECK((D - (Mat::Identity(n, n) + P * Q.adjoint())).norm() < 1e-12);
  CHECK(S.inverse_defect() < 1e-12);
  Vec x = rand_unit(n);
  CHECK((S.apply_inv(S.apply(x)) - x).norm() < 1e-12);
  ThinSimilarity Sa = S.adjoint_inverse();
  CHECK((Sa.dense(n) - Mat(D.inverse().adjoint())).norm() < 1e-10);
  ThinSimilarity T = ThinSimilarity::from_forward(0.2 * rand_mat(n, 2),
                                                  rand_mat(n, 2));
  ThinSimilarity ST = compose(S, T);
  CHECK((ST.dense(n) - D * T.dense(n)).norm() < 1e-11);
  CHECK((ThinSimilarity::identity(n).dense(n) - Mat::Identity(n, n)).norm() ==
        0.0);
}

TEST_CASE("near eigenvector of a 3x3 diagonal at lambda = -1/2") {
  StructuredOp A = diag_op({1.0, 0.5, 1.0 / 3.0});
  Vec e = Vec::Zero(3);
  e[0] = 1.0;
  CaseTag tag{CaseVariant::Case1, cplx(0, 0)};
  ApproachSequence seq = near_eigenvectors(A, tag, {cplx(-0.5, 0)}, e);
  // h = alpha (A + 1/2)^{-1} e1 = e1 with alpha = 3/2
  CHECK(seq.alphas[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK((seq.vectors.col(0) - e).norm() < 1e-14);
  CHECK(seq.residuals[0] < 1e-14);
  CHECK(seq.has_quad());
}

TEST_CASE("near eigenvector of the shift is the geometric vector") {
  OperatorSpec s;
  s.family = Family::unilateral_shift;
  s.rule.kind = SequenceRule::Kind::constant;
  const int n = 128;
  StructuredOp A = structured_form(build_truncation(s, n));
  Vec e = Vec::Zero(n);
  e[0] = 1.0;
  CaseTag tag{CaseVariant::Case1, cplx(0, 0)};
  const double lam = 1.1;
  ApproachSequence seq = near_eigenvectors(A, tag, {cplx(lam, 0)}, e);
  CHECK_FALSE(seq.has_quad());
  Vec v(n);
  for (int k = 1; k <= n; ++k) v[k - 1] = -std::pow(lam, -k);
  v.normalize();
  CHECK((seq.vectors.col(0) - v).norm() < 1e-8);
  CHECK(seq.residuals[0] < 1e-10);
}

TEST_CASE("near eigenvectors reject a non-unit probe") {
  StructuredOp A = diag_op({1.0, 0.5});
  Vec e = Vec::Zero(2);
  e[0] = 2.0;
  CaseTag tag{CaseVariant::Case1, cplx(0, 0)};
  CHECK_THROWS_AS(near_eigenvectors(A, tag, {cplx(-0.5, 0)}, e),
                  PreconditionError);
}

TEST_CASE("selection accepts orthonormal candidates with identity Gram") {
  const int n = 32, m = 10;
  ApproachSequence seq;
  seq.beta = cplx(0, 0);
  seq.probe = Vec::Zero(n);
  seq.probe[0] = 1.0;
  seq.vectors = Mat::Zero(n, m);
  for (int k = 0; k < m; ++k) {
    seq.vectors(k + 1, k) = 1.0;  // e_{k+2}, orthogonal to the probe
    seq.lambdas.emplace_back(0.1 / (k + 1), 0.0);
    seq.alphas.push_back(0.01 * (k + 1));
    seq.residuals.push_back(0.0);
    seq.kappas.push_back(1.0);
  }
  AlmostOrthogonalSystem sys = select_almost_orthogonal(seq, 8);
  CHECK(sys.span_dim == 8);
  CHECK(int(sys.selected.size()) == 7);
  for (int k = 0; k < 7; ++k) CHECK(sys.selected[std::size_t(k)] == k);
  CHECK(sys.max_offdiag < 1e-15);
  CHECK((sys.gram - Mat::Identity(8, 8)).norm() < 1e-14);
  CHECK(sys.alphas[1] == doctest::Approx(0.01));
}

TEST_CASE("selection exhausts when every candidate equals the probe") {
  const int n = 16, m = 12;
  ApproachSequence seq;
  seq.beta = cplx(0, 0);
  seq.probe = Vec::Zero(n);
  seq.probe[0] = 1.0;
  seq.vectors = Mat::Zero(n, m);
  for (int k = 0; k < m; ++k) {
    seq.vectors(0, k) = 1.0;
    seq.lambdas.emplace_back(0.1 / (k + 1), 0.0);
    seq.alphas.push_back(0.01);
    seq.residuals.push_back(0.0);
    seq.kappas.push_back(1.0);
  }
  CHECK_THROWS_AS(select_almost_orthogonal(seq, 6), SelectionExhausted);
}

TEST_CASE("riesz certificate of a 2x2 Gram matrix") {
  AlmostOrthogonalSystem sys;
  sys.span_dim = 2;
  sys.gram.resize(2, 2);
  sys.gram << 1.0, 0.9, 0.9, 1.0;
  auto [lo, hi] = riesz_certificate(sys);
  CHECK(lo == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(hi == doctest::Approx(1.9).epsilon(1e-12));
  sys.gram << 1.0, 1.0, 1.0, 1.0;  // rank one: not a Riesz system
  CHECK_THROWS_AS(riesz_certificate(sys), ConstructionError);
}

TEST_CASE("orthonormalization anchors the probe and completes the span") {
  const int n = 8;
  AlmostOrthogonalSystem sys;
  sys.span_dim = 2;
  sys.l = Mat::Zero(n, 2);
  sys.l(0, 0) = 1.0;
  sys.l(0, 1) = sys.l(1, 1) = 1.0 / std::sqrt(2.0);
  sys.gram.resize(2, 2);
  sys.gram << 1.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0;
  orthonormalize(sys);
  CHECK(sys.f(0, 0) == cplx(1.0, 0.0));  // f_1 = e exactly
  CHECK(std::abs(sys.f(1, 1) - cplx(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(sys.f(0, 1)) < 1e-14);
}

TEST_CASE("similarity from an already orthonormal system is the identity") {
  const int n = 12;
  AlmostOrthogonalSystem sys;
  sys.span_dim = 3;
  sys.l = Mat::Zero(n, 3);
  for (int k = 0; k < 3; ++k) sys.l(k, k) = 1.0;
  sys.f = sys.l;
  SimilarityMap sm = build_similarity(sys);
  CHECK(sm.map_residual < 1e-14);
  CHECK(sm.inv_defect < 1e-14);
  CHECK(sm.offspace_residual < 1e-14);
  CHECK(sm.sigma_min == doctest::Approx(1.0));
  Vec x = rand_unit(n);
  CHECK((sm.S.apply(x) - x).norm() < 1e-14);
}

TEST_CASE("core matrix carries lambda on the diagonal and alpha in row one") {
  const Chain& c = chain256();
  CoreMatrix core = assemble_core(c.A, c.sys, c.sim);
  for (int k = 1; k < c.sys.span_dim; ++k) {
    CHECK(std::abs(core.G(k, k) - c.sys.lambdas[std::size_t(k)]) < 1e-9);
    CHECK(std::abs(core.G(0, k) - cplx(c.sys.alphas[std::size_t(k)], 0)) <
          1e-9);
  }
  CHECK(core.off_pattern < 1e-9);
  CHECK(core.beta_residual < 1e-9);
}

TEST_CASE("half-space cutoff on a zero core is immediate") {
  const int m = 9;
  AlmostOrthogonalSystem sys;
  sys.span_dim = m;
  sys.alphas.assign(m, 0.0);
  sys.lambdas.assign(m, cplx(0, 0));
  CoreMatrix core;
  core.diag.assign(m, cplx(0, 0));
  IdealSpec tr{IdealKind::trace, 1.0};
  HalfChoice ch = choose_halfspace(core, sys, tr, 1e-6);
  CHECK(ch.K == 1);
  // all even 1-based positions: columns 1, 3, 5, 7
  REQUIRE(ch.M_cols.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(ch.M_cols[std::size_t(k)] == 2 * k + 1);
  // an order-one core admits no cutoff at this budget
  core.diag.assign(m, cplx(1, 0));
  CHECK_THROWS_AS(choose_halfspace(core, sys, tr, 1e-6), BudgetExhausted);
}

TEST_CASE("2x2 decomposition blocks match a dense conjugation") {
  const Chain& c = chain256();
  const int n = 256, q = int(c.dec.basis_M.cols());
  REQUIRE(c.dec.T22.has_value());
  Mat Sd = c.dec.sim.S.dense(n);
  Mat M = Sd.inverse() * c.A.dense() * Sd;
  const Mat& B = c.dec.basis_M;
  CHECK((Mat(B.adjoint() * M * B) - c.dec.T11).norm() < 1e-8);
  Mat MB = M * B;
  CHECK((MB - B * (B.adjoint() * MB) - c.dec.R_emb).norm() < 1e-8);
  Mat row = B.adjoint() * M;
  CHECK((row - (row * B) * B.adjoint() - c.dec.T12_emb).norm() < 1e-8);
  const Mat& Bp = *c.dec.basis_Mperp;
  CHECK((Mat(Bp.adjoint() * M * Bp) - *c.dec.T22).norm() < 1e-8);
  // lower-left block of the conjugated operator vanishes up to rank one
  Mat low = Mat(Bp.adjoint() * M * B);
  auto [rank, sv] = numerical_rank(low, 1e-7);
  (void)sv;
  CHECK(rank <= 1);
  CHECK(c.dec.certs.rank_R <= 1);
  CHECK(c.dec.certs.norm_T11 < 0.05);
  CHECK(c.dec.certs.ideal_T11 < 0.05);
  CHECK(c.dec.certs.t11_offdiag < 1e-10);
  CHECK(c.dec.certs.dim_M + c.dec.certs.dim_Mperp == n);
}

TEST_CASE("oblique form: idempotent projection, rank-one corner") {
  const Chain& c = chain256();
  ObliqueDecomposition ob = oblique_form(c.A, c.dec);
  CHECK(ob.idem_defect < 1e-8);
  CHECK(ob.rank_Rhat <= 1);
  CHECK(ob.spectra_match < 1e-8);
  const int n = 256, q = int(ob.W1.cols());
  Mat E = ob.W1 * ob.W2.adjoint();
  CHECK((E * E - E).norm() < 1e-8);
  CHECK((E * ob.W1 - ob.W1).norm() < 1e-8);
  // A W1 = W1 That11 + Rhat with Rhat killed by E
  Mat AW1(n, q);
  for (int k = 0; k < q; ++k) AW1.col(k) = c.A.apply(Vec(ob.W1.col(k)));
  CHECK((AW1 - ob.W1 * ob.That11 - ob.Rhat_emb).norm() < 1e-10);
  CHECK((E * ob.Rhat_emb).norm() < 1e-8);
}

TEST_CASE("eigenvector-rich diagonal family decomposes by restriction") {
  OperatorSpec s;
  s.rule.kind = SequenceRule::Kind::zero_even_one_over_n_odd;
  TruncatedOperator T = build_truncation(s, 256);
  IdealSpec tr{IdealKind::trace, 1.0};
  HalfSpaceDecomposition2x2 dec = decompose_case2(s, T, tr, 0.1, 9);
  CHECK(dec.tag.variant == CaseVariant::Case2);
  CHECK(dec.certs.rank_R <= 1);
  CHECK(dec.certs.norm_T11 < 0.1);
  CHECK(dec.certs.ideal_T11 < 0.1);
  // the embedded basis is supported on the eigenvalue-carrying coordinates
  for (int r = 1; r < 256; r += 2) CHECK(dec.basis_M.row(r).norm() == 0.0);
}

TEST_CASE("nilpotent pair: half the kernel carries exactly zero blocks") {
  OperatorSpec s;
  s.family = Family::nilpotent_pair;
  s.rule.kind = SequenceRule::Kind::constant;
  s.rule.value = 0.5;
  TruncatedOperator T = build_truncation(s, 256);
  IdealSpec comp{IdealKind::compact, 1.0};
  HalfSpaceDecomposition2x2 dec = decompose_case3(s, T, comp, 0.1);
  CHECK(dec.T11.norm() == 0.0);
  CHECK(dec.R_emb.norm() == 0.0);
  CHECK(dec.sim.S.inverse_defect() == 0.0);
  CHECK(int(dec.basis_M.cols()) >= 4);
  CHECK((Mat(dec.basis_M.adjoint() * dec.basis_M) -
         Mat::Identity(dec.basis_M.cols(), dec.basis_M.cols()))
            .norm() == 0.0);
}

TEST_CASE("equivalence replacement: psd diagonal mode") {
  Mat I4 = Mat::Identity(4, 4);
  EquivalenceResult r = equivalence_replace(I4, EquivalenceMode::psd_diagonal);
  CHECK((r.S1 * I4 * r.S2 - r.B).norm() < 1e-12);
  CHECK((r.B - I4).norm() < 1e-12);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 1.0;
  r = equivalence_replace(D, EquivalenceMode::psd_diagonal);
  CHECK(std::abs(r.B(0, 0) - cplx(2, 0)) < 1e-12);
  CHECK(std::abs(r.B(1, 1) - cplx(1, 0)) < 1e-12);
  CHECK(r.cond_S1 == 1.0);
}

TEST_CASE("equivalence replacement: projection mode") {
  // a well-conditioned block becomes an exact orthogonal projection
  Mat M = rand_invertible(4);  // singular values in [0.5, 2]
  EquivalenceResult r =
      equivalence_replace(M, EquivalenceMode::projection, 0.1);
  CHECK((r.S1 * M * r.S2 - r.B).norm() < 1e-10);
  CHECK((r.B * r.B - r.B).norm() < 1e-10);
  CHECK((r.B - r.B.adjoint()).norm() < 1e-10);
  CHECK(r.cond_S1 <= 4.0 + 1e-9);
  // a singular value inside the declared gap is a range-closedness failure
  Mat bad = Mat::Zero(3, 3);
  bad(0, 0) = 1.0;
  bad(1, 1) = 1.0;
  bad(2, 2) = 5e-6;
  CHECK_THROWS_AS(equivalence_replace(bad, EquivalenceMode::projection),
                  RangeNotClosed);
  CHECK_THROWS_AS(equivalence_replace(Mat::Zero(2, 3),
                                      EquivalenceMode::projection),
                  PreconditionError);
}

TEST_CASE("rank of the corner block is a similarity invariant") {
  Vec u = rand_unit(6), v = rand_unit(6);
  Mat R = u * v.adjoint();
  for (int t = 0; t < 100; ++t) {
    Mat P = rand_invertible(6), Q = rand_invertible(6);
    auto [rank, sv] = numerical_rank(Mat(P * R * Q));
    (void)sv;
    CHECK(rank == 1);
  }
}
