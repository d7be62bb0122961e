#pragma once

#include <quadmath.h>

#include <cmath>
#include <vector>

namespace halfspace {

// Minimal quad-precision (binary128) real vector helpers.
//
// The almost-orthogonality thresholds 4^-(j+m) fall below double-precision
// roundoff once a system grows past ~13 vectors, while the 3x3 refinement
// needs outer systems of ~19. For the self-adjoint families the whole
// resolvent pipeline is elementwise, so running that stage in __float128
// costs O(N*m) quad flops and buys ~1e-32 attainable Gram off-diagonals.

using qreal = __float128;

using qvec = std::vector<qreal>;

inline qreal qabs(qreal x) { return x < 0 ? -x : x; }

inline qreal qdot(const qvec& a, const qvec& b) {
  qreal s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline qreal qnorm(const qvec& a) { return sqrtq(qdot(a, a)); }

inline void qscale(qvec& a, qreal c) {
  for (auto& x : a) x *= c;
}

// a -= c*b
inline void qaxpy(qvec& a, qreal c, const qvec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= c * b[i];
}

inline std::vector<double> to_double(const qvec& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<double>(a[i]);
  return out;
}

}  // namespace halfspace
