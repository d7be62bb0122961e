// Timing comparison of the parallel kernels against their serial reference
// implementations, with agreement checks.

#include <chrono>
#include <cstdio>
#include <random>

#include "halfspace/kernels.hpp"
#include "halfspace/spectra.hpp"

using namespace halfspace;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

template <class F>
double timed(F&& f, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return ms_since(t0) / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 4096;
  const int m = argc > 2 ? std::atoi(argv[2]) : 24;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  std::printf("kernel benchmark: dim=%d, shifts/cols=%d, reps=%d\n", n, m, reps);

  OperatorSpec spec;  // diagonal 1/n
  TruncatedOperator T = build_truncation(spec, n);
  StructuredOp A = structured_form(T);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Vec probe(n);
  for (int i = 0; i < n; ++i) probe[i] = cplx(g(rng), g(rng));
  probe.normalize();
  std::vector<cplx> lambdas;
  for (int k = 1; k <= m; ++k)
    lambdas.emplace_back(1.0 / (3.0 * k) + 1e-3 / (k + 1), 1e-4 * k);
  Mat H(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) H(i, j) = cplx(g(rng), g(rng));
    H.col(j).normalize();
  }
  std::vector<double> alphas(m, 0.25);

  auto report = [](const char* name, double par, double ser, double diff) {
    std::printf("%-16s parallel %8.3f ms   serial %8.3f ms   speedup %5.2fx   "
                "max |diff| %.3g\n",
                name, par, ser, ser / par, diff);
  };

  {
    std::vector<double> a, b;
    double tp = timed([&] { a = kernels::resolvent_norms(A, probe, lambdas); }, reps);
    double tser =
        timed([&] { b = kernels::resolvent_norms_serial(A, probe, lambdas); }, reps);
    double diff = 0.0;
    for (int k = 0; k < m; ++k) diff = std::max(diff, std::abs(a[k] - b[k]));
    report("resolvent_norms", tp, tser, diff);
  }
  {
    Mat a, b;
    double tp = timed([&] { a = kernels::gram(H); }, reps);
    double tser = timed([&] { b = kernels::gram_serial(H); }, reps);
    report("gram", tp, tser, (a - b).cwiseAbs().maxCoeff());
  }
  {
    std::vector<double> a, b;
    double tp =
        timed([&] { a = kernels::residual_norms(A, H, lambdas, alphas, probe); }, reps);
    double tser = timed(
        [&] { b = kernels::residual_norms_serial(A, H, lambdas, alphas, probe); },
        reps);
    double diff = 0.0;
    for (int k = 0; k < m; ++k) diff = std::max(diff, std::abs(a[k] - b[k]));
    report("residual_norms", tp, tser, diff);
  }
  return 0;
}
