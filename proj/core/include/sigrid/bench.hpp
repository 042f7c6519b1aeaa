#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigrid/mcmc.hpp"

namespace sigrid {

struct TvPoint {
  std::size_t step = 0;
  double tv = 0;

  bool operator==(const TvPoint&) const = default;
};

// TV-to-own-stationary-target trace of one method, measured across replica
// chains at each step.
struct MixingTrace {
  StepperKind method = StepperKind::pca;
  double ns_per_step = 0;  // wall time per single-replica step
  std::vector<TvPoint> trace;

  bool operator==(const MixingTrace&) const = default;
};

struct ThroughputPoint {
  int threads = 0;
  double ns_per_step = 0;
  double speedup = 0;  // relative to the 1-thread entry

  bool operator==(const ThroughputPoint&) const = default;
};

struct BenchReport {
  std::string kind;  // "mixing" | "throughput"
  std::size_t n_components = 0;
  std::size_t alphabet_size = 0;
  std::size_t steps = 0;
  std::size_t replicas = 0;  // mixing only
  std::uint64_t seed = 0;
  int threads_used = 1;
  bool states_identical = true;  // throughput determinism check
  std::vector<MixingTrace> mixing;
  std::vector<ThroughputPoint> throughput;

  std::string to_text() const;
  static BenchReport parse_text(const std::string& text);

  bool operator==(const BenchReport&) const = default;
};

// Evolves `replicas` chains per method from a fixed initial state and records
// the TV distance between the replica ensemble and the method's own
// stationary target after every step. Model must be enumerable (k^N <= 2^16).
BenchReport bench_mixing(const LatticeModel& model, std::span<const StepperKind> methods,
                         std::size_t steps, std::size_t replicas, std::uint64_t seed);

// Wall time per synchronous update on a k=2 ring of n sites, for each thread
// count; 3 warm-up steps are excluded from the timing. Verifies the final
// states are bit-identical across thread counts.
BenchReport bench_throughput(std::size_t n, std::span<const int> thread_counts,
                             std::size_t steps, std::uint64_t seed);

}  // namespace sigrid
