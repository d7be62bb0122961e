#include "halfspace/opcore.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

namespace halfspace {

std::string family_name(Family f) {
  switch (f) {
    case Family::diagonal: return "diagonal";
    case Family::unilateral_shift: return "unilateral_shift";
    case Family::adjoint_shift: return "adjoint_shift";
    case Family::weighted_shift: return "weighted_shift";
    case Family::band: return "band";
    case Family::nilpotent_pair: return "nilpotent_pair";
    case Family::perturbed: return "perturbed";
  }
  throw SpecError("unknown family enum value");
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::diagonal, Family::unilateral_shift,
                   Family::adjoint_shift, Family::weighted_shift, Family::band,
                   Family::nilpotent_pair, Family::perturbed}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown operator family: " + name);
}

std::string rule_name(SequenceRule::Kind k) {
  switch (k) {
    case SequenceRule::Kind::one_over_n: return "one_over_n";
    case SequenceRule::Kind::one_over_2n_minus_1: return "one_over_2n_minus_1";
    case SequenceRule::Kind::zero_even_one_over_n_odd:
      return "zero_even_one_over_n_odd";
    case SequenceRule::Kind::constant: return "constant";
    case SequenceRule::Kind::geometric: return "geometric";
  }
  throw SpecError("unknown rule enum value");
}

SequenceRule::Kind rule_from_name(const std::string& name) {
  for (auto k : {SequenceRule::Kind::one_over_n,
                 SequenceRule::Kind::one_over_2n_minus_1,
                 SequenceRule::Kind::zero_even_one_over_n_odd,
                 SequenceRule::Kind::constant, SequenceRule::Kind::geometric}) {
    if (rule_name(k) == name) return k;
  }
  throw ConfigError("unknown sequence rule: " + name);
}

cplx SequenceRule::eval(long n) const {
  if (n < 1) throw SpecError("sequence rule index must be >= 1");
  switch (kind) {
    case Kind::one_over_n: return cplx(1.0 / double(n), 0.0);
    case Kind::one_over_2n_minus_1: return cplx(1.0 / double(2 * n - 1), 0.0);
    case Kind::zero_even_one_over_n_odd:
      return n % 2 == 0 ? cplx(0.0, 0.0) : cplx(1.0 / double(n), 0.0);
    case Kind::constant: return cplx(value, 0.0);
    case Kind::geometric: return cplx(value * std::pow(ratio, double(n)), 0.0);
  }
  throw SpecError("unknown rule enum value");
}

double SequenceRule::sup_bound() const {
  switch (kind) {
    case Kind::one_over_n:
    case Kind::one_over_2n_minus_1:
    case Kind::zero_even_one_over_n_odd:
      return 1.0;
    case Kind::constant: return std::abs(value);
    case Kind::geometric:
      return std::abs(ratio) <= 1.0 ? std::abs(value * ratio)
                                    : std::numeric_limits<double>::infinity();
  }
  throw SpecError("unknown rule enum value");
}

double OperatorSpec::bound() const {
  double b = declared_bound > 0 ? declared_bound : rule.sup_bound();
  for (const auto& p : perturbations) b += std::abs(p.coeff);
  return b;
}

TruncatedOperator build_truncation(const OperatorSpec& spec, int dim) {
  if (dim < 2) throw ConfigError("truncation dim must be >= 2");
  Mat M = Mat::Zero(dim, dim);
  const SequenceRule& r = spec.rule;
  switch (spec.effective_family()) {
    case Family::diagonal:
      for (int n = 1; n <= dim; ++n) M(n - 1, n - 1) = r.eval(n);
      break;
    case Family::unilateral_shift:
      for (int n = 1; n < dim; ++n) M(n, n - 1) = 1.0;
      break;
    case Family::adjoint_shift:
      for (int n = 1; n < dim; ++n) M(n - 1, n) = 1.0;
      break;
    case Family::weighted_shift:
      for (int n = 1; n < dim; ++n) M(n, n - 1) = r.eval(n);
      break;
    case Family::band:
      // Hermitian tridiagonal model: zero diagonal, off-diagonals w_n.
      for (int n = 1; n < dim; ++n) {
        M(n, n - 1) = r.eval(n);
        M(n - 1, n) = std::conj(r.eval(n));
      }
      break;
    case Family::nilpotent_pair:
      // Direct sum of 2x2 nilpotent cells on coordinates (2k-1, 2k).
      for (int k = 1; 2 * k <= dim; ++k) M(2 * k - 1, 2 * k - 2) = r.eval(k);
      break;
    case Family::perturbed:
      throw SpecError("perturbed spec must declare a base family");
  }
  for (const auto& p : spec.perturbations) {
    if (p.i < 1 || p.j < 1) throw SpecError("rank-one term index must be >= 1");
    if (p.i <= dim && p.j <= dim) M(p.i - 1, p.j - 1) += p.coeff;
  }
  double sup = 0.0;
  for (int n = 1; n <= dim; ++n) sup = std::max(sup, std::abs(r.eval(n)));
  if (spec.declared_bound > 0 && sup > spec.declared_bound + 1e-12)
    throw SpecError("generated sequence exceeds the declared bound");
  return TruncatedOperator{dim, std::move(M), spec};
}

namespace {

// Hager/Higham 1-norm estimate of inv(A) from its LU factorization.
double inverse_norm1_estimate(const Eigen::PartialPivLU<Mat>& lu, int n) {
  Vec x = Vec::Constant(n, cplx(1.0 / n, 0.0));
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Vec y = lu.solve(x);
    double norm1 = y.cwiseAbs().sum();
    if (norm1 <= est && iter > 0) break;
    est = norm1;
    Vec xi(n);
    for (int i = 0; i < n; ++i) {
      double a = std::abs(y[i]);
      xi[i] = a > 0 ? y[i] / a : cplx(1.0, 0.0);
    }
    Vec z = lu.adjoint().solve(xi);
    int jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    x.setZero();
    x[jmax] = 1.0;
  }
  return est;
}

}  // namespace

ResolventResult resolvent_solve(const TruncatedOperator& T, cplx lambda,
                                const Vec& e, double pivot_tol,
                                double kappa_cap) {
  const int n = T.dim;
  if (e.size() != n) throw PreconditionError("probe dimension mismatch");
  if (std::abs(e.norm() - 1.0) > 1e-12)
    throw PreconditionError("probe must be a unit vector");
  Mat A = T.matrix - lambda * Mat::Identity(n, n);
  Eigen::PartialPivLU<Mat> lu(A);
  const auto& U = lu.matrixLU();
  double scale = A.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i) {
    if (std::abs(U(i, i)) < pivot_tol * std::max(1.0, scale))
      throw SingularResolvent("lambda is (numerically) an eigenvalue of the "
                              "truncation");
  }
  ResolventResult out;
  out.x = lu.solve(e);
  double a1 = A.cwiseAbs().colwise().sum().maxCoeff();
  out.kappa = a1 * inverse_norm1_estimate(lu, n);
  out.ill_conditioned = out.kappa > kappa_cap;
  return out;
}

std::vector<double> singular_values(const Mat& M) {
  Eigen::BDCSVD<Mat> svd(M);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

std::pair<int, std::vector<double>> numerical_rank(const Mat& M, double tol) {
  if (tol <= 0 || tol >= 1) throw PreconditionError("rank tol must be in (0,1)");
  auto s = singular_values(M);
  int rank = 0;
  if (!s.empty() && s[0] > 0) {
    for (double v : s)
      if (v > tol * s[0]) ++rank;
  }
  return {rank, std::move(s)};
}

double operator_norm(const Mat& M) {
  const int n = int(std::max(M.rows(), M.cols()));
  if (n <= 768) {
    auto s = singular_values(M);
    return s.empty() ? 0.0 : s[0];
  }
  // Power iteration on M^*M with a fixed-seed start; the iterate norm is
  // monotone so the exit test on its growth is a sound relative criterion.
  std::mt19937_64 rng(20240214);
  std::normal_distribution<double> g;
  Vec v(M.cols());
  for (int i = 0; i < v.size(); ++i) v[i] = cplx(g(rng), g(rng));
  v.normalize();
  double prev = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vec w = M.adjoint() * (M * v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    double cur = std::sqrt(nw);
    if (it > 4 && std::abs(cur - prev) <= 1e-13 * cur) return cur;
    prev = cur;
  }
  return prev;
}

std::string format_complex(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g%+.17gj", z.real(), z.imag());
  return buf;
}

void write_matrix_csv(const Mat& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_complex(M(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace halfspace
