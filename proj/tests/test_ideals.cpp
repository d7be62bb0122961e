#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "halfspace/ideals.hpp"

using namespace halfspace;

TEST_CASE("ideal names") {
  CHECK(ideal_from_name("trace").kind == IdealKind::trace);
  IdealSpec s2 = ideal_from_name("schatten:2");
  CHECK(s2.kind == IdealKind::schatten);
  CHECK(s2.p == doctest::Approx(2.0));
  CHECK(ideal_from_name("compact").kind == IdealKind::compact);
  CHECK_THROWS_AS(ideal_from_name("schatten:0.5"), ConfigError);
  CHECK_THROWS_AS(ideal_from_name("nuclear"), ConfigError);
}

TEST_CASE("sequence norms") {
  IdealSpec tr = ideal_from_name("trace");
  CHECK(sequence_norm({1.0, 0.5, 0.25}, tr) == doctest::Approx(1.75));
  CHECK(sequence_norm({3.0, 4.0}, ideal_from_name("schatten:2")) ==
        doctest::Approx(5.0));
  std::vector<double> geo;
  double sum = 0.0;
  for (int n = 1; n <= 20; ++n) {
    geo.push_back(0.1 * std::pow(3.0, -n));
    sum += geo.back();
  }
  CHECK(sequence_norm(geo, tr) == doctest::Approx(sum).epsilon(1e-14));
  CHECK(sum == doctest::Approx(0.05).epsilon(1e-8));
}

TEST_CASE("matrix ideal norms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vec u(5), v(5);
  for (int i = 0; i < 5; ++i) {
    u[i] = cplx(g(rng), g(rng));
    v[i] = cplx(g(rng), g(rng));
  }
  Mat outer = u * v.adjoint();
  for (const char* name : {"trace", "schatten:2", "schatten:3"})
    CHECK(matrix_ideal_norm(outer, ideal_from_name(name)) ==
          doctest::Approx(u.norm() * v.norm()).epsilon(1e-10));
  CHECK(matrix_ideal_norm(Mat::Identity(4, 4), ideal_from_name("trace")) ==
        doctest::Approx(4.0));
  Mat H = Mat::Zero(100, 100);
  double h100 = 0.0;
  for (int n = 1; n <= 100; ++n) {
    H(n - 1, n - 1) = 1.0 / n;
    h100 += 1.0 / n;
  }
  CHECK(matrix_ideal_norm(H, ideal_from_name("trace")) ==
        doctest::Approx(h100).epsilon(1e-12));
  CHECK(h100 == doctest::Approx(5.187).epsilon(1e-3));
}

TEST_CASE("membership certificates") {
  IdealSpec tr = ideal_from_name("trace");
  std::vector<double> geo;
  for (int n = 1; n <= 30; ++n) geo.push_back(std::pow(3.0, -n));
  MembershipCertificate c = certify_membership(geo, tr, 0.6);
  CHECK(c.pass);
  CHECK(c.norm_value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(certify_membership(std::vector<double>(8, 0.0),
                           ideal_from_name("schatten:2"), 1e-12)
            .pass);
  CHECK_FALSE(certify_membership(std::vector<double>(20, 1.0),
                                 ideal_from_name("compact"), 0.1)
                  .pass);
}

TEST_CASE("trace equals schatten-1 and diagonal consistency") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> seq;
    for (int i = 0; i < 12; ++i) seq.push_back(u(rng));
    double a = sequence_norm(seq, ideal_from_name("trace"));
    double b = sequence_norm(seq, ideal_from_name("schatten:1"));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    Mat d = Mat::Zero(12, 12);
    for (int i = 0; i < 12; ++i) d(i, i) = seq[std::size_t(i)];
    CHECK(matrix_ideal_norm(d, ideal_from_name("trace")) ==
          doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("unitary invariance, triangle inequality, norm ordering") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  auto rand_mat = [&](int n) {
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = cplx(g(rng), g(rng));
    return M;
  };
  IdealSpec tr = ideal_from_name("trace");
  IdealSpec hs = ideal_from_name("schatten:2");
  for (int t = 0; t < 500; ++t) {
    Mat A = rand_mat(6), B = rand_mat(6);
    // triangle inequality
    CHECK(matrix_ideal_norm(A + B, hs) <=
          matrix_ideal_norm(A, hs) + matrix_ideal_norm(B, hs) + 1e-9);
    // ordering: trace >= hilbert-schmidt >= operator norm
    double s1 = matrix_ideal_norm(A, tr);
    double s2 = matrix_ideal_norm(A, hs);
    double op = operator_norm(A);
    CHECK(s1 >= s2 - 1e-10);
    CHECK(s2 >= op - 1e-10);
  }
  Mat A = rand_mat(6);
  Eigen::HouseholderQR<Mat> q1(rand_mat(6)), q2(rand_mat(6));
  Mat U = q1.householderQ(), V = q2.householderQ();
  CHECK(matrix_ideal_norm(U * A * V, tr) ==
        doctest::Approx(matrix_ideal_norm(A, tr)).epsilon(1e-10));
}
