#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "halfspace/spectra.hpp"

using namespace halfspace;

namespace {

OperatorSpec diag_spec() { return OperatorSpec{}; }

OperatorSpec shift_spec() {
  OperatorSpec s;
  s.family = Family::unilateral_shift;
  s.rule.kind = SequenceRule::Kind::constant;
  return s;
}

OperatorSpec even_kernel_spec() {
  OperatorSpec s;
  s.rule.kind = SequenceRule::Kind::zero_even_one_over_n_odd;
  return s;
}

OperatorSpec nilpotent_spec() {
  OperatorSpec s;
  s.family = Family::nilpotent_pair;
  s.rule.kind = SequenceRule::Kind::constant;
  s.rule.value = 0.5;
  return s;
}

}  // namespace

TEST_CASE("diagonal oracle: eigenvalues 1/n accumulating at 0") {
  SpectralInfo info = spectral_oracle(diag_spec());
  CHECK(info.sigma_e.contains(cplx(0, 0)));
  CHECK(info.sigma_e.distance(cplx(0.5, 0)) > 0.4);
  CHECK(info.point_spectrum(cplx(0, 0)) == PointSpectrumAnswer::no);
  for (int n = 1; n <= 512; ++n)
    CHECK(info.point_spectrum(cplx(1.0 / n, 0)) == PointSpectrumAnswer::yes);
  CHECK(info.point_spectrum(cplx(0.123, 0)) == PointSpectrumAnswer::no);
}

TEST_CASE("shift oracle: unit circle essential spectrum, empty point spectrum") {
  SpectralInfo info = spectral_oracle(shift_spec());
  CHECK(info.sigma.contains(cplx(0.5, 0)));
  CHECK(info.sigma_e.contains(cplx(0, 1)));
  CHECK_FALSE(info.sigma_e.contains(cplx(0.5, 0)));
  CHECK(info.point_spectrum(cplx(0.3, 0)) == PointSpectrumAnswer::no);
  CHECK(info.boundary_e_samples.size() >= 64);
  // resolvent blow-up toward the boundary from outside
  TruncatedOperator T = build_truncation(shift_spec(), 128);
  Vec e = Vec::Zero(128);
  e[0] = 1.0;
  double far = resolvent_solve(T, cplx(1.5, 0), e).x.norm();
  double near = resolvent_solve(T, cplx(1.02, 0), e).x.norm();
  CHECK(near > 5 * far);
}

TEST_CASE("eigenvalue-rich diagonal oracle") {
  SpectralInfo info = spectral_oracle(even_kernel_spec());
  CHECK(info.point_spectrum(cplx(0, 0)) == PointSpectrumAnswer::yes);
  CHECK(info.sigma_e.contains(cplx(0, 0)));
}

TEST_CASE("case dispatch") {
  CaseTag t1 = select_beta(diag_spec());
  CHECK(t1.variant == CaseVariant::Case1);
  CHECK(std::abs(t1.beta) < 1e-14);
  CaseTag t2 = select_beta(shift_spec());
  CHECK(t2.variant == CaseVariant::Case1);
  CHECK(std::abs(t2.beta - cplx(1, 0)) < 1e-12);
  CaseTag t3 = select_beta(even_kernel_spec());
  CHECK(t3.variant == CaseVariant::Case2);
  CHECK(std::abs(t3.beta) < 1e-14);
  CHECK(select_beta(nilpotent_spec()).variant == CaseVariant::Case3Nilpotent);
  // determinism
  CaseTag again = select_beta(diag_spec());
  CHECK(again.variant == t1.variant);
  CHECK(again.beta == t1.beta);
}

TEST_CASE("approach generation for the diagonal family") {
  IdealSpec tr = ideal_from_name("trace");
  CaseTag tag = select_beta(diag_spec());
  CHECK_THROWS_AS(generate_approach(diag_spec(), tag, tr, 2, 0.5, 256),
                  ApproachFailure);
  auto lambdas = generate_approach(diag_spec(), tag, tr, 10, 0.5, 256);
  REQUIRE(lambdas.size() == 10);
  SpectralInfo info = spectral_oracle(diag_spec());
  double sum = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    CHECK(info.sigma.distance(lambdas[i]) > 0);
    sum += std::abs(lambdas[i]);
    for (std::size_t j = 0; j < i; ++j)
      CHECK(std::abs(lambdas[i] - lambdas[j]) > 1e-12);
  }
  CHECK(sum <= 0.5);
  auto again = generate_approach(diag_spec(), tag, tr, 10, 0.5, 256);
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    CHECK(lambdas[i] == again[i]);
}

TEST_CASE("approach generation for the shift is radial") {
  IdealSpec comp = ideal_from_name("compact");
  CaseTag tag = select_beta(shift_spec());
  auto lambdas = generate_approach(shift_spec(), tag, comp, 8, 0.5, 256);
  for (int n = 1; n <= 8; ++n)
    CHECK(std::abs(lambdas[std::size_t(n - 1)] -
                   cplx(1.0 + std::pow(2.0, -n), 0)) < 1e-12);
}

TEST_CASE("probe selection on the diagonal model") {
  IdealSpec tr = ideal_from_name("trace");
  CaseTag tag = select_beta(diag_spec());
  TruncatedOperator T = build_truncation(diag_spec(), 256);
  auto lambdas = generate_approach(diag_spec(), tag, tr, 9, 0.5, 256);
  auto [probe, growth] = select_probe(T, lambdas);
  CHECK(probe.norm() == doctest::Approx(1.0));
  CHECK(growth.growth_factor >= 10.0);
  CHECK_FALSE(growth.weak_growth);
  // certificate norms agree with direct resolvent solves
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    double direct = resolvent_solve(T, lambdas[k], probe).x.norm();
    CHECK(growth.norms[k] == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("probe selection flags weak growth away from the spectrum") {
  OperatorSpec ident;
  ident.rule.kind = SequenceRule::Kind::constant;
  ident.rule.value = 1.0;
  TruncatedOperator T = build_truncation(ident, 128);
  std::vector<cplx> lambdas;
  for (int n = 1; n <= 8; ++n) lambdas.emplace_back(2.0 + std::pow(2.0, -n), 0);
  auto [probe, growth] = select_probe(T, lambdas);
  (void)probe;
  CHECK(growth.weak_growth);
  CHECK(growth.growth_factor < 10.0);
}

TEST_CASE("structured forms match dense truncations") {
  for (OperatorSpec s :
       {diag_spec(), shift_spec(), even_kernel_spec(), nilpotent_spec()}) {
    TruncatedOperator T = build_truncation(s, 48);
    CHECK((structured_form(T).dense() - T.matrix).norm() < 1e-14);
  }
  OperatorSpec pert = diag_spec();
  pert.family = Family::perturbed;
  pert.base = Family::diagonal;
  pert.perturbations.push_back({2, 5, cplx(0.25, -0.125)});
  TruncatedOperator T = build_truncation(pert, 48);
  CHECK((structured_form(T).dense() - T.matrix).norm() < 1e-14);
}

TEST_CASE("oracle refuses unsupported combinations") {
  OperatorSpec ws;
  ws.family = Family::weighted_shift;
  ws.rule.kind = SequenceRule::Kind::constant;
  ws.rule.value = 0.5;
  CHECK_THROWS_AS(spectral_oracle(ws), SpecError);  // weight limit undeclared
  ws.weight_limit = 0.5;
  CHECK_NOTHROW(spectral_oracle(ws));
}
