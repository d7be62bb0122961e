#include "halfspace/kernels.hpp"

namespace halfspace {
namespace kernels {

std::vector<double> resolvent_norms(const StructuredOp& A, const Vec& probe,
                                    const std::vector<cplx>& lambdas) {
  const int m = int(lambdas.size());
  std::vector<double> out(m);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < m; ++i) {
    ShiftedSolver solver(A, lambdas[i]);
    out[i] = solver.solve(probe).norm();
  }
  return out;
}

std::vector<double> resolvent_norms_serial(const StructuredOp& A,
                                           const Vec& probe,
                                           const std::vector<cplx>& lambdas) {
  std::vector<double> out;
  out.reserve(lambdas.size());
  for (cplx lam : lambdas) {
    ShiftedSolver solver(A, lam);
    out.push_back(solver.solve(probe).norm());
  }
  return out;
}

Mat gram(const Mat& L) {
  const int m = int(L.cols());
  Mat G(m, m);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i <= j; ++i) {
      G(i, j) = L.col(i).dot(L.col(j));
      G(j, i) = std::conj(G(i, j));
    }
  }
  return G;
}

Mat gram_serial(const Mat& L) {
  const int m = int(L.cols());
  Mat G(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) G(i, j) = L.col(i).dot(L.col(j));
  return G;
}

std::vector<double> residual_norms(const StructuredOp& T, const Mat& H,
                                   const std::vector<cplx>& lambdas,
                                   const std::vector<double>& alphas,
                                   const Vec& e) {
  const int m = int(H.cols());
  std::vector<double> out(m);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < m; ++i) {
    Vec r = T.apply(H.col(i)) - lambdas[i] * H.col(i) - alphas[i] * e;
    out[i] = r.norm();
  }
  return out;
}

std::vector<double> residual_norms_serial(const StructuredOp& T, const Mat& H,
                                          const std::vector<cplx>& lambdas,
                                          const std::vector<double>& alphas,
                                          const Vec& e) {
  std::vector<double> out;
  out.reserve(H.cols());
  for (int i = 0; i < H.cols(); ++i) {
    Vec r = T.apply(H.col(i)) - lambdas[i] * H.col(i) - alphas[i] * e;
    out.push_back(r.norm());
  }
  return out;
}

}  // namespace kernels
}  // namespace halfspace
