#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sigrid/inversion.hpp"

using namespace sigrid;

namespace {

BoxDomain unit_box(std::size_t d) {
  BoxDomain box;
  for (std::size_t i = 0; i < d; ++i) box.bounds.emplace_back(0.0, 1.0);
  return box;
}

OperatorConfig config_1d(unsigned n, double w,
                         SigmoidKind kind = SigmoidKind::logistic) {
  return {unit_box(1), n, {kind, w}, OperatorForm::discrete};
}

double rel_sup_diff(std::span<const double> a, std::span<const double> b) {
  double diff = 0, norm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    norm = std::max(norm, std::abs(b[i]));
  }
  return diff / std::max(norm, 1e-300);
}

}  // namespace

TEST_CASE("rows are stochastic and nonnegative") {
  std::mt19937_64 rng(3);
  for (auto kind : {SigmoidKind::logistic, SigmoidKind::smoothed_ramp}) {
    for (double w : {1.0, 16.0}) {
      for (unsigned n : {1u, 3u, 8u}) {
        std::size_t d = 1 + rng() % 2;
        OperatorConfig config{unit_box(d), n, {kind, w}, OperatorForm::discrete};
        GridOperatorMatrix A = build_grid_matrix(config);
        for (std::size_t r = 0; r < A.size; ++r) {
          double sum = 0;
          for (std::size_t c = 0; c < A.size; ++c) {
            CHECK(A(r, c) >= 0.0);
            sum += A(r, c);
          }
          CHECK(std::abs(sum - 1.0) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("n=1 matrix is 2x2 and symmetric") {
  GridOperatorMatrix A = build_grid_matrix(config_1d(1, 1.0));
  REQUIRE(A.size == 2);
  CHECK(A(0, 1) == doctest::Approx(A(1, 0)).epsilon(1e-14));
  CHECK(A(0, 0) == doctest::Approx(A(1, 1)).epsilon(1e-14));
  // Derived from the kernel directly: row 0 weights are phi(0), phi(1).
  SigmoidSpec spec{SigmoidKind::logistic, 1.0};
  double p0 = phi_eval(spec, 0.0), p1 = phi_eval(spec, 1.0);
  CHECK(A(0, 0) == doctest::Approx(p0 / (p0 + p1)).epsilon(1e-14));
}

TEST_CASE("diagonal structure at steep w") {
  // The interior diagonal equals phi(0)/sum(phi over the integers) and
  // phi(0) <= 1/2, so strict dominance cannot hold away from the boundary;
  // only the one-sided boundary rows exceed 1/2.
  GridOperatorMatrix A = build_grid_matrix(config_1d(8, 16.0));
  REQUIRE(A.size == 9);
  CHECK(A(0, 0) > 0.5);
  CHECK(A(8, 8) > 0.5);
  for (std::size_t j = 1; j < 8; ++j) {
    CHECK(A(j, j) < 0.5);
    CHECK(A(j, j) > 0.49);
  }
  CHECK(A.dominance_margin() <= 0.0);
}

TEST_CASE("dominance margin positive for the 2-node case") {
  GridOperatorMatrix A = build_grid_matrix(config_1d(1, 1.0));
  CHECK(A.dominance_margin() > 0.0);
}

TEST_CASE("direct solve recovers random grid functions") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  GridOperatorMatrix A = build_grid_matrix(config_1d(8, 16.0));
  std::vector<double> truth(A.size);
  for (double& v : truth) v = value(rng);
  std::vector<double> g = A.apply(truth);
  std::vector<double> recovered = invert_direct(A, g);
  CHECK(rel_sup_diff(recovered, truth) < 1e-8);
}

TEST_CASE("direct solve identity and singular cases") {
  GridOperatorMatrix eye;
  eye.size = 3;
  eye.entries = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::vector<double> g = {3.0, -1.0, 2.5};
  CHECK(invert_direct(eye, g) == g);

  GridOperatorMatrix singular;
  singular.size = 2;
  singular.entries = {0.5, 0.5, 0.5, 0.5};  // duplicate rows
  CHECK_THROWS_WITH_AS(invert_direct(singular, std::vector<double>{1.0, 1.0}),
                       doctest::Contains("singular"), NumericError);
}

TEST_CASE("iterative solve: constant right-hand side converges immediately") {
  GridOperatorMatrix A = build_grid_matrix(config_1d(8, 16.0));
  std::vector<double> g(A.size, 4.2);
  IterativeResult r = invert_iterative(A, g, 1e-10);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  REQUIRE(r.residual_history.size() == 1);
  CHECK(r.residual_history[0] < 1e-12);
  for (double v : r.solution) CHECK(v == doctest::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("iterative agrees with direct at steep w") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  for (unsigned n : {4u, 8u, 16u}) {
    GridOperatorMatrix A = build_grid_matrix(config_1d(n, 16.0));
    std::vector<double> truth(A.size);
    for (double& v : truth) v = value(rng);
    std::vector<double> g = A.apply(truth);

    IterativeResult it = invert_iterative(A, g, 1e-10, 200000);
    CHECK(it.converged);
    std::vector<double> direct = invert_direct(A, g);
    CHECK(rel_sup_diff(it.solution, direct) < 1e-6);
    CHECK(rel_sup_diff(direct, truth) < 1e-8);
  }
}

TEST_CASE("iterative on a strictly dominant synthetic matrix") {
  GridOperatorMatrix A;
  A.size = 3;
  A.entries = {0.8, 0.1, 0.1, 0.15, 0.7, 0.15, 0.05, 0.05, 0.9};
  CHECK(A.dominance_margin() > 0.0);
  std::vector<double> truth = {1.5, -2.0, 0.75};
  std::vector<double> g = A.apply(truth);

  IterativeResult r = invert_iterative(A, g, 1e-12, 10000);
  CHECK(r.converged);
  CHECK(r.dominance_ok);
  CHECK(rel_sup_diff(r.solution, truth) < 1e-10);
  // agreement with the direct oracle within 10*tol under verified dominance
  std::vector<double> direct = invert_direct(A, g);
  CHECK(rel_sup_diff(r.solution, direct) < 1e-11);
  for (std::size_t i = 1; i < r.residual_history.size(); ++i)
    CHECK(r.residual_history[i] <= r.residual_history[i - 1]);
}

TEST_CASE("shallow sigmoid reports failed dominance") {
  GridOperatorMatrix A = build_grid_matrix(config_1d(64, 1.0));
  std::vector<double> g(A.size, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(0.3 * double(i));
  IterativeResult r = invert_iterative(A, g, 1e-8, 50);
  CHECK_FALSE(r.dominance_ok);
  CHECK(r.dominance_margin < 0.0);
}

TEST_CASE("divergence guard triggers on an expanding matrix") {
  GridOperatorMatrix bad;
  bad.size = 2;
  bad.entries = {3.0, 0.0, 0.0, 3.0};  // I - A has spectral radius 2
  std::vector<double> g = {1.0, 1.0};
  CHECK_THROWS_WITH_AS(invert_iterative(bad, g, 1e-12, 1000),
                       doctest::Contains("diverged"), NumericError);
}

TEST_CASE("roundtrip report for constant field") {
  RoundtripReport r = roundtrip_error(config_1d(8, 16.0),
                                      [](std::span<const double>) { return 5.0; });
  CHECK(r.forward_sup_error < 1e-10);
  CHECK(r.inversion_residual < 1e-10);
  CHECK(r.recovery_error < 1e-10);
}

TEST_CASE("roundtrip recovers sin at steep w") {
  const double pi = std::numbers::pi;
  RoundtripReport r = roundtrip_error(
      config_1d(16, 16.0),
      [pi](std::span<const double> x) { return std::sin(2.0 * pi * x[0]); },
      1e-10, 200000);
  CHECK(r.recovery_error < 1e-6);
  CHECK(r.inversion_residual < 1e-9);
}

TEST_CASE("roundtrip propagates sampling failures") {
  CHECK_THROWS_AS(roundtrip_error(config_1d(4, 16.0),
                                  [](std::span<const double> x) {
                                    return x[0] > 0.4 ? std::nan("") : 1.0;
                                  }),
                  NumericError);
}

TEST_CASE("oversized matrix is rejected") {
  OperatorConfig config{unit_box(2), 64, {SigmoidKind::logistic, 1.0},
                        OperatorForm::discrete};
  CHECK_THROWS_WITH_AS(build_grid_matrix(config), doctest::Contains("too large"),
                       DomainError);
}
