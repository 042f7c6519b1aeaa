#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigrid/mcmc.hpp"
#include "sigrid/raster.hpp"

namespace sigrid {

// Empirical two-reference classifier: each value is placed at
// r = (x - ref_frozen) / (ref_thaw - ref_frozen) and labeled thaw iff
// r >= cutoff (ties go to thaw).
struct ThresholdSpec {
  double ref_frozen = 0.0;
  double ref_thaw = 1.0;
  double cutoff = 0.5;

  void validate() const;
};

struct ThresholdResult {
  std::vector<std::uint8_t> labels;  // 1 = thaw, 0 = frozen
  std::vector<double> relative;      // r clamped into [0,1]
};

ThresholdResult threshold_classify(std::span<const double> band, const ThresholdSpec& spec);

struct BetaPhase {
  double beta = 1.0;
  std::size_t steps = 0;
};

// Gaussian likelihood with per-class means over a 4-neighbor Ising prior.
// theta_i = (mu_thaw - mu_frozen)/(2*noise_sigma^2) * (y_i - midpoint) * 2,
// the local log-likelihood-ratio coefficient.
struct PosteriorSpec {
  double noise_sigma = 0.15;
  double smoothness = 0.5;
  double mu_frozen = 0.25;
  double mu_thaw = 0.75;
  std::vector<BetaPhase> beta_schedule;

  void validate(bool need_schedule) const;
};

struct PosteriorModel {
  PairPotential potential;
  LatticeState state_template;  // alphabet {-1 (frozen), +1 (thaw)}, labels all 0
  std::size_t width = 0;
  std::size_t height = 0;
};

PosteriorModel build_posterior(std::span<const double> band, std::size_t height,
                               std::size_t width, const PosteriorSpec& spec, double beta);

enum class MapSampler { pca, gibbs };

struct MapResult {
  std::vector<std::uint8_t> labels;  // 1 = thaw
  std::vector<double> energy_trace;  // energy after every annealing step
  double best_energy = 0;
  std::size_t total_steps = 0;
};

// Annealed MAP search: runs the beta schedule, tracking the lowest-energy
// state visited. The incumbent starts from the per-pixel baseline
// (thaw iff theta_i > 0), so the result is never worse than that baseline;
// with smoothness = 0 it equals it exactly. One gibbs step is a full sweep.
// Deterministic given (inputs, seed).
MapResult map_estimate(std::span<const double> band, std::size_t height,
                       std::size_t width, const PosteriorSpec& spec, MapSampler sampler,
                       std::uint64_t seed, int threads = 1);

enum class RetrievalMethod { threshold, bayes_pca, bayes_gibbs };

RetrievalMethod parse_retrieval_method(const std::string& name);
std::string to_string(RetrievalMethod method);

struct RetrievalParams {
  ThresholdSpec threshold;
  PosteriorSpec posterior;
  double min_pct = 2.0;
  double max_pct = 98.0;
};

struct RetrievalReport {
  RetrievalMethod method = RetrievalMethod::threshold;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t band = 0;
  double frozen_fraction = 0;
  double thaw_fraction = 0;
  double runtime_seconds = 0;
  std::size_t steps = 0;             // bayes only
  double energy_initial = 0;         // bayes only
  double energy_best = 0;            // bayes only
  std::vector<double> energy_trace;  // bayes only

  std::string to_text() const;
};

struct RetrievalResult {
  RasterField map;  // single band, values in {0, 1}
  RetrievalReport report;
};

// Preprocesses the band (percentile clip + min-max normalization), then
// dispatches to the chosen classifier.
RetrievalResult retrieve_ft(const RasterField& field, std::size_t band,
                            RetrievalMethod method, const RetrievalParams& params,
                            std::uint64_t seed, int threads = 1);

}  // namespace sigrid
