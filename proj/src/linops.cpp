#include "halfspace/linops.hpp"

#include <Eigen/SVD>

namespace halfspace {

Vec StructuredOp::apply(const Vec& x) const {
  Vec y = d.cwiseProduct(x);
  const int n = dim();
  for (int i = 1; i < n && sub.size() > 0; ++i) y[i] += sub[i - 1] * x[i - 1];
  if (U.cols() > 0) y.noalias() += U * (V.adjoint() * x);
  return y;
}

Vec StructuredOp::apply_adjoint(const Vec& x) const {
  Vec y = d.conjugate().cwiseProduct(x);
  const int n = dim();
  for (int i = 1; i < n && sub.size() > 0; ++i)
    y[i - 1] += std::conj(sub[i - 1]) * x[i];
  if (U.cols() > 0) y.noalias() += V * (U.adjoint() * x);
  return y;
}

Mat StructuredOp::dense() const {
  const int n = dim();
  Mat M = d.asDiagonal();
  for (int i = 1; i < n && sub.size() > 0; ++i) M(i, i - 1) = sub[i - 1];
  if (U.cols() > 0) M.noalias() += U * V.adjoint();
  return M;
}

void StructuredOp::add_lowrank(const Mat& U2, const Mat& V2) {
  if (U2.cols() == 0) return;
  if (U.cols() == 0) {
    U = U2;
    V = V2;
    return;
  }
  Mat Un(dim(), U.cols() + U2.cols()), Vn(dim(), V.cols() + V2.cols());
  Un << U, U2;
  Vn << V, V2;
  U = std::move(Un);
  V = std::move(Vn);
}

StructuredOp StructuredOp::adjoint() const {
  if (sub.size() > 0)
    throw NumericalFailure("adjoint() requires a diagonal base");
  StructuredOp out;
  out.d = d.conjugate();
  out.U = V;
  out.V = U;
  return out;
}

StructuredOp StructuredOp::diag_of(const TruncatedOperator& T) {
  StructuredOp out;
  out.d = T.matrix.diagonal();
  return out;
}

ShiftedSolver::ShiftedSolver(const StructuredOp& A, cplx lambda,
                             double pivot_tol)
    : A_(A), lambda_(lambda) {
  const int n = A.dim();
  double scale = std::max(1.0, A.d.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    // Both base solves divide by (d_i - lambda).
    if (std::abs(A.d[i] - lambda) < pivot_tol * scale)
      throw SingularResolvent("shift lies on the base-factor spectrum");
  }
  const int r = A.rank_correction();
  if (r > 0) {
    BinvU_.resize(n, r);
    BadjV_.resize(n, r);
    for (int k = 0; k < r; ++k) {
      BinvU_.col(k) = base_solve(A.U.col(k));
      BadjV_.col(k) = base_solve_adjoint(A.V.col(k));
    }
    Mat small = Mat::Identity(r, r) + A.V.adjoint() * BinvU_;
    small_.compute(small);
    double smin = small.jacobiSvd().singularValues().minCoeff();
    if (smin < pivot_tol)
      throw SingularResolvent("Woodbury capacitance matrix is singular");
    small_adj_lu_.compute(small.adjoint());
  }
}

Vec ShiftedSolver::base_solve(const Vec& b) const {
  const int n = A_.dim();
  Vec x(n);
  if (A_.sub.size() == 0) {
    for (int i = 0; i < n; ++i) x[i] = b[i] / (A_.d[i] - lambda_);
  } else {
    for (int i = 0; i < n; ++i) {
      cplx rhs = b[i];
      if (i > 0) rhs -= A_.sub[i - 1] * x[i - 1];
      x[i] = rhs / (A_.d[i] - lambda_);
    }
  }
  return x;
}

Vec ShiftedSolver::base_solve_adjoint(const Vec& b) const {
  const int n = A_.dim();
  Vec x(n);
  if (A_.sub.size() == 0) {
    for (int i = 0; i < n; ++i) x[i] = b[i] / std::conj(A_.d[i] - lambda_);
  } else {
    for (int i = n - 1; i >= 0; --i) {
      cplx rhs = b[i];
      if (i + 1 < n) rhs -= std::conj(A_.sub[i]) * x[i + 1];
      x[i] = rhs / std::conj(A_.d[i] - lambda_);
    }
  }
  return x;
}

Vec ShiftedSolver::solve(const Vec& b) const {
  Vec x = base_solve(b);
  if (A_.rank_correction() > 0) {
    Vec t = small_.solve(A_.V.adjoint() * x);
    x.noalias() -= BinvU_ * t;
  }
  return x;
}

Vec ShiftedSolver::solve_adjoint(const Vec& b) const {
  Vec x = base_solve_adjoint(b);
  if (A_.rank_correction() > 0) {
    Vec t = small_adj_lu_.solve(A_.U.adjoint() * x);
    x.noalias() -= BadjV_ * t;
  }
  return x;
}

double ShiftedSolver::kappa_estimate() const {
  const int n = A_.dim();
  // ||A - lambda||_1 bound from columns of the structured form.
  Eigen::VectorXd colsum = (A_.d.array() - lambda_).abs();
  for (int i = 1; i < n && A_.sub.size() > 0; ++i)
    colsum[i - 1] += std::abs(A_.sub[i - 1]);
  if (A_.rank_correction() > 0) {
    // Column-sum bound for U V^*: col_j <= sum_k |V_jk| * ||U_col_k||_1.
    Eigen::VectorXd ucol = A_.U.cwiseAbs().colwise().sum().transpose();
    colsum += A_.V.cwiseAbs() * ucol;
  }
  double a1 = colsum.maxCoeff();
  // Hager estimate of ||(A - lambda)^{-1}||_1.
  Vec x = Vec::Constant(n, cplx(1.0 / n, 0.0));
  double est = 0.0;
  for (int iter = 0; iter < 4; ++iter) {
    Vec y = solve(x);
    double norm1 = y.cwiseAbs().sum();
    if (norm1 <= est && iter > 0) break;
    est = norm1;
    Vec xi(n);
    for (int i = 0; i < n; ++i) {
      double a = std::abs(y[i]);
      xi[i] = a > 0 ? y[i] / a : cplx(1.0, 0.0);
    }
    Vec z = solve_adjoint(xi);
    int jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    x.setZero();
    x[jmax] = 1.0;
  }
  return a1 * est;
}

}  // namespace halfspace
