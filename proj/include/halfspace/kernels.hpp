#pragma once

#include <vector>

#include "halfspace/linops.hpp"

namespace halfspace {
namespace kernels {

// Data-parallel kernels used by the pipeline, with OpenMP implementations
// and serial reference implementations kept for testing. tools/bench_kernels
// compares the two.

// ||(A - lambda_n)^{-1} probe|| for each n.
std::vector<double> resolvent_norms(const StructuredOp& A, const Vec& probe,
                                    const std::vector<cplx>& lambdas);
std::vector<double> resolvent_norms_serial(const StructuredOp& A,
                                           const Vec& probe,
                                           const std::vector<cplx>& lambdas);

// Gram matrix L^* L.
Mat gram(const Mat& L);
Mat gram_serial(const Mat& L);

// ||T h_n - lambda_n h_n - alpha_n e|| for each column of H.
std::vector<double> residual_norms(const StructuredOp& T, const Mat& H,
                                   const std::vector<cplx>& lambdas,
                                   const std::vector<double>& alphas,
                                   const Vec& e);
std::vector<double> residual_norms_serial(const StructuredOp& T, const Mat& H,
                                          const std::vector<cplx>& lambdas,
                                          const std::vector<double>& alphas,
                                          const Vec& e);

}  // namespace kernels
}  // namespace halfspace
