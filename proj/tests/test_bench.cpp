#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sigrid/bench.hpp"
#include "test_support.hpp"

using namespace sigrid;
using namespace test_support;

namespace {

LatticeModel free_pair_model() {
  // Two independent spins, zero field: PCA draws i.i.d. uniform states.
  LatticeModel model;
  model.alphabet = {-1.0, 1.0};
  model.potential = PairPotential::from_triples(2, {}, {0.0, 0.0}, 1.0);
  return model;
}

LatticeModel small_ring_model() {
  std::vector<CouplingTriple> triples = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {0, 3, 1.0}};
  LatticeModel model;
  model.alphabet = {-1.0, 1.0};
  model.potential = PairPotential::from_triples(4, triples, {0.0, 0.0, 0.0, 0.0}, 0.5);
  return model;
}

}  // namespace

TEST_CASE("report round trip: mixing") {
  BenchReport report;
  report.kind = "mixing";
  report.n_components = 4;
  report.alphabet_size = 2;
  report.steps = 3;
  report.replicas = 100;
  report.seed = 42;
  report.threads_used = 1;
  report.mixing.push_back(
      {StepperKind::pca, 123.5, {{1, 0.75}, {2, 0.251234567890123}, {3, 0.01}}});
  report.mixing.push_back({StepperKind::gibbs, 77.25, {{1, 0.9}, {2, 0.5}, {3, 0.3}}});
  CHECK(BenchReport::parse_text(report.to_text()) == report);
}

TEST_CASE("report round trip: throughput") {
  BenchReport report;
  report.kind = "throughput";
  report.n_components = 1000;
  report.alphabet_size = 2;
  report.steps = 10;
  report.seed = 7;
  report.threads_used = 8;
  report.states_identical = true;
  report.throughput = {{1, 1048576.0, 1.0}, {2, 524288.5, 2.0000019073468254}, {8, 300000.25, 3.49524866024387}};
  CHECK(BenchReport::parse_text(report.to_text()) == report);

  CHECK_THROWS_AS(BenchReport::parse_text("garbage"), FormatError);
}

TEST_CASE("pca mixing on a free model is immediate") {
  LatticeModel model = free_pair_model();
  StepperKind methods[1] = {StepperKind::pca};
  BenchReport report = bench_mixing(model, methods, 10, 20000, 11);
  REQUIRE(report.mixing.size() == 1);
  const auto& trace = report.mixing[0].trace;
  REQUIRE(trace.size() == 10);
  // One synchronous step already samples the uniform stationary measure, so
  // every checkpoint sits at the replica-sampling noise floor.
  for (const auto& point : trace) CHECK(point.tv < 0.01);
  CHECK(report.mixing[0].ns_per_step > 0.0);
}

TEST_CASE("tv traces decay and settle") {
  LatticeModel model = small_ring_model();
  StepperKind methods[2] = {StepperKind::pca, StepperKind::gibbs};
  BenchReport report = bench_mixing(model, methods, 300, 4000, 3);
  REQUIRE(report.mixing.size() == 2);
  for (const auto& m : report.mixing) {
    REQUIRE(m.trace.size() == 300);
    // window means over 100 steps: non-increasing up to sampling noise
    double w0 = 0, w1 = 0, w2 = 0;
    for (int i = 0; i < 100; ++i) {
      w0 += m.trace[std::size_t(i)].tv;
      w1 += m.trace[std::size_t(100 + i)].tv;
      w2 += m.trace[std::size_t(200 + i)].tv;
    }
    CHECK(w1 <= w0 + 1.0);   // windows are averages of 100 points
    CHECK(w2 <= w1 + 1.0);
    CHECK(w1 / 100.0 <= w0 / 100.0 + 0.01);
    CHECK(w2 / 100.0 <= w1 / 100.0 + 0.01);
  }
}

TEST_CASE("mixing requires an enumerable model") {
  LatticeModel model;
  model.alphabet = {-1.0, 1.0};
  model.potential = PairPotential::from_triples(40, {}, std::vector<double>(40, 0.0), 1.0);
  StepperKind methods[1] = {StepperKind::pca};
  CHECK_THROWS_AS(bench_mixing(model, methods, 5, 10, 1), DomainError);
}

TEST_CASE("throughput determinism and table shape") {
  int threads[2] = {1, 2};
  BenchReport report = bench_throughput(5000, threads, 8, 99);
  CHECK(report.states_identical);
  REQUIRE(report.throughput.size() == 2);
  CHECK(report.throughput[0].threads == 1);
  CHECK(report.throughput[0].speedup == 1.0);
  for (const auto& p : report.throughput) CHECK(p.ns_per_step > 0.0);
  CHECK(report.threads_used == 2);

  std::string text = report.to_text();
  CHECK(BenchReport::parse_text(text) == report);
}

TEST_CASE("per-step time grows roughly linearly in the lattice size") {
  int threads[1] = {1};
  BenchReport small = bench_throughput(100000, threads, 5, 7);
  BenchReport large = bench_throughput(1000000, threads, 5, 7);
  double ratio = large.throughput[0].ns_per_step / small.throughput[0].ns_per_step;
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
}
