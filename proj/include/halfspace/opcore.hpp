#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halfspace/errors.hpp"

namespace halfspace {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Operator specifications: symbolic descriptions of infinite operators from
// which principal-corner truncations are built.
// ---------------------------------------------------------------------------

enum class Family {
  diagonal,
  unilateral_shift,
  adjoint_shift,
  weighted_shift,
  band,
  nilpotent_pair,
  perturbed,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Closed-form rule n |-> complex value (n is 1-based), used for diagonal
// entries, shift weights, band off-diagonals or nilpotent cell weights.
struct SequenceRule {
  enum class Kind {
    one_over_n,                // 1/n
    one_over_2n_minus_1,       // 1/(2n-1)
    zero_even_one_over_n_odd,  // 0 for even n, 1/n for odd n
    constant,                  // value
    geometric,                 // value * ratio^n
  };
  Kind kind = Kind::one_over_n;
  double value = 1.0;
  double ratio = 0.5;

  cplx eval(long n) const;
  // Supremum of |eval(n)| over n >= 1 (exact for the supported rules).
  double sup_bound() const;
};

std::string rule_name(SequenceRule::Kind k);
SequenceRule::Kind rule_from_name(const std::string& name);

// coeff * e_i (x) e_j, i.e. entry (i, j) += coeff (1-based indices).
struct RankOneTerm {
  long i = 1;
  long j = 1;
  cplx coeff;
};

struct OperatorSpec {
  Family family = Family::diagonal;
  // Base family used when family == perturbed.
  Family base = Family::diagonal;
  SequenceRule rule;
  // Declared bound on the generated sequence; 0 means "derive from rule".
  double declared_bound = 0.0;
  // Modulus limit of the weights (weighted_shift oracle needs it declared).
  std::optional<double> weight_limit;
  std::vector<RankOneTerm> perturbations;

  Family effective_family() const {
    return family == Family::perturbed ? base : family;
  }
  double bound() const;
};

struct TruncatedOperator {
  int dim = 0;
  Mat matrix;  // principal dim x dim corner of the spec's infinite matrix
  OperatorSpec spec;
};

// pre: dim >= 2, generators defined on 1..dim. errors: ConfigError, SpecError.
TruncatedOperator build_truncation(const OperatorSpec& spec, int dim);

// ---------------------------------------------------------------------------
// Dense linear algebra primitives.
// ---------------------------------------------------------------------------

struct ResolventResult {
  Vec x;
  double kappa = 0.0;        // 1-norm condition estimate of (T - lambda I)
  bool ill_conditioned = false;
};

inline constexpr double kDefaultPivotTol = 1e-13;
inline constexpr double kDefaultKappaCap = 1e8;

// Solves (T - lambda I) x = e with partial pivoting and a Hager-style
// condition estimate. pre: ||e|| = 1 +- 1e-12, lambda not an eigenvalue of
// the truncation (witnessed by the pivot check).
ResolventResult resolvent_solve(const TruncatedOperator& T, cplx lambda,
                                const Vec& e,
                                double pivot_tol = kDefaultPivotTol,
                                double kappa_cap = kDefaultKappaCap);

// Descending singular values.
std::vector<double> singular_values(const Mat& M);

// rank = #{ s_i > tol * s_max }; zero matrix has rank 0.
std::pair<int, std::vector<double>> numerical_rank(const Mat& M,
                                                   double tol = 1e-8);

// Largest singular value. Uses a direct SVD for small matrices and power
// iteration on M^*M for large ones.
double operator_norm(const Mat& M);

// ---------------------------------------------------------------------------
// Matrix dump format shared with the CLI: CSV, row-major, entries "re+imj"
// with 17 significant digits.
// ---------------------------------------------------------------------------

std::string format_complex(cplx z);
void write_matrix_csv(const Mat& M, const std::string& path);

}  // namespace halfspace
