#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halfspace/linops.hpp"

using namespace halfspace;

namespace {

std::mt19937_64 rng(21);
std::normal_distribution<double> g;

Vec rand_vec(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v;
}

Mat rand_mat(int n, int m) {
  Mat M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = cplx(g(rng), g(rng));
  return M;
}

StructuredOp sample_op(int n, bool bidiagonal, int rank) {
  StructuredOp A;
  A.d = rand_vec(n);
  if (bidiagonal) A.sub = rand_vec(n - 1);
  if (rank > 0) {
    A.U = rand_mat(n, rank);
    A.V = rand_mat(n, rank);
  }
  return A;
}

}  // namespace

TEST_CASE("structured apply agrees with the dense matrix") {
  for (bool bidiag : {false, true}) {
    StructuredOp A = sample_op(24, bidiag, 3);
    Mat D = A.dense();
    for (int t = 0; t < 5; ++t) {
      Vec x = rand_vec(24);
      CHECK((A.apply(x) - D * x).norm() < 1e-12 * x.norm() * D.norm());
      CHECK((A.apply_adjoint(x) - D.adjoint() * x).norm() <
            1e-12 * x.norm() * D.norm());
    }
  }
}

TEST_CASE("low-rank corrections append") {
  StructuredOp A = sample_op(16, false, 2);
  Mat D0 = A.dense();
  Mat U2 = rand_mat(16, 2), V2 = rand_mat(16, 2);
  A.add_lowrank(U2, V2);
  CHECK(A.rank_correction() == 4);
  CHECK((A.dense() - (D0 + U2 * V2.adjoint())).norm() < 1e-12 * D0.norm());
}

TEST_CASE("adjoint of a diagonal-based operator") {
  StructuredOp A = sample_op(12, false, 2);
  StructuredOp B = A.adjoint();
  CHECK((B.dense() - Mat(A.dense().adjoint())).norm() < 1e-13);
  StructuredOp C = sample_op(12, true, 0);
  CHECK_THROWS_AS(C.adjoint(), NumericalFailure);
}

TEST_CASE("shifted solver matches dense solves") {
  for (bool bidiag : {false, true}) {
    for (int rank : {0, 3}) {
      StructuredOp A = sample_op(32, bidiag, rank);
      cplx lam(7.5, 0.5);  // far from the random diagonal
      ShiftedSolver s(A, lam);
      Mat D = A.dense() - lam * Mat::Identity(32, 32);
      for (int t = 0; t < 3; ++t) {
        Vec b = rand_vec(32);
        Vec x = s.solve(b);
        CHECK((D * x - b).norm() < 1e-10 * b.norm());
        Vec y = s.solve_adjoint(b);
        CHECK((D.adjoint() * y - b).norm() < 1e-10 * b.norm());
      }
      double kappa = s.kappa_estimate();
      CHECK(kappa >= 1.0);
    }
  }
}

TEST_CASE("solver rejects shifts on the diagonal") {
  StructuredOp A;
  A.d = Vec::Zero(4);
  A.d[0] = 1.0;
  A.d[1] = 0.5;
  A.d[2] = 0.25;
  A.d[3] = 0.125;
  CHECK_THROWS_AS(ShiftedSolver(A, cplx(0.5, 0)), SingularResolvent);
}

TEST_CASE("condition estimate tracks near-singularity") {
  StructuredOp A;
  A.d = Vec::Ones(8);
  A.d[5] = 1e-6;
  ShiftedSolver s(A, cplx(0, 0));
  CHECK(s.kappa_estimate() > 1e5);
}
