#include "sigrid/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sigrid {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void ThresholdSpec::validate() const {
  if (!std::isfinite(ref_frozen) || !std::isfinite(ref_thaw))
    throw DomainError("threshold references must be finite");
  if (ref_frozen == ref_thaw)
    throw DomainError("threshold references must differ");
  if (!(cutoff > 0.0 && cutoff < 1.0))
    throw DomainError("threshold cutoff must lie in (0,1)");
}

ThresholdResult threshold_classify(std::span<const double> band,
                                   const ThresholdSpec& spec) {
  spec.validate();
  ThresholdResult out;
  out.labels.resize(band.size());
  out.relative.resize(band.size());
  const double scale = spec.ref_thaw - spec.ref_frozen;
  for (std::size_t i = 0; i < band.size(); ++i) {
    double r = (band[i] - spec.ref_frozen) / scale;
    out.labels[i] = r >= spec.cutoff ? 1 : 0;
    out.relative[i] = std::clamp(r, 0.0, 1.0);
  }
  return out;
}

void PosteriorSpec::validate(bool need_schedule) const {
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma))
    throw DomainError("noise_sigma must be positive");
  if (!(smoothness >= 0.0) || !std::isfinite(smoothness))
    throw DomainError("smoothness must be nonnegative");
  if (!std::isfinite(mu_frozen) || !std::isfinite(mu_thaw) || mu_frozen == mu_thaw)
    throw DomainError("class means must be finite and distinct");
  if (need_schedule) {
    if (beta_schedule.empty()) throw DomainError("annealing schedule is empty");
    double prev = 0.0;
    for (const auto& phase : beta_schedule) {
      if (!(phase.beta > prev))
        throw DomainError("schedule betas must be positive and strictly increasing");
      if (phase.steps == 0) throw DomainError("schedule phases need at least one step");
      prev = phase.beta;
    }
  }
}

PosteriorModel build_posterior(std::span<const double> band, std::size_t height,
                               std::size_t width, const PosteriorSpec& spec,
                               double beta) {
  spec.validate(false);
  if (width == 0 || height == 0) throw DomainError("grid dimensions must be positive");
  if (band.size() != width * height)
    throw DomainError("band length does not match the grid dimensions");

  const std::size_t n = band.size();
  const double midpoint = 0.5 * (spec.mu_thaw + spec.mu_frozen);
  const double gain = (spec.mu_thaw - spec.mu_frozen) / (2.0 * spec.noise_sigma * spec.noise_sigma);

  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = gain * (band[i] - midpoint) * 2.0;

  std::vector<CouplingTriple> triples;
  if (spec.smoothness != 0.0) {
    triples.reserve(2 * n);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        std::uint32_t i = std::uint32_t(r * width + c);
        if (c + 1 < width)
          triples.push_back({i, i + 1, spec.smoothness});
        if (r + 1 < height)
          triples.push_back({i, std::uint32_t(i + width), spec.smoothness});
      }
    }
  }

  PosteriorModel model;
  model.width = width;
  model.height = height;
  model.potential = PairPotential::from_triples(n, triples, std::move(theta), beta);
  model.state_template.alphabet = {-1.0, 1.0};
  model.state_template.labels.assign(n, 0);
  return model;
}

MapResult map_estimate(std::span<const double> band, std::size_t height,
                       std::size_t width, const PosteriorSpec& spec, MapSampler sampler,
                       std::uint64_t seed, int threads) {
  spec.validate(true);
  PosteriorModel model =
      build_posterior(band, height, width, spec, spec.beta_schedule.front().beta);
  PairPotential& potential = model.potential;
  const std::size_t n = band.size();

  // Baseline: the per-pixel decision thaw iff theta_i > 0 (the threshold
  // classification expressed in model units). Best-state tracking keeps it
  // unless something strictly better is visited.
  LatticeState state = model.state_template;
  for (std::size_t i = 0; i < n; ++i) state.labels[i] = potential.theta(i) > 0.0 ? 1 : 0;

  MapResult result;
  std::vector<std::uint8_t> best = state.labels;
  double best_energy = lattice_energy(state, potential);
  result.energy_trace.push_back(best_energy);

  const CounterRng rng(seed);
  LatticeState buffer = state;
  std::uint64_t t = 0;
  for (const auto& phase : spec.beta_schedule) {
    potential.set_beta(phase.beta);
    for (std::size_t s = 0; s < phase.steps; ++s, ++t) {
      StepContext ctx{seed, t};
      if (sampler == MapSampler::pca) {
        pca_step_into(state, buffer, potential, ctx, threads);
        std::swap(state, buffer);
      } else {
        // One step = one systematic sweep.
        for (std::size_t i = 0; i < n; ++i) {
          double h = local_field(state, potential, i);
          double u = rng.uniform(t, i, 0);
          state.labels[i] = heat_bath_label(potential.beta() * h, state.alphabet, u);
        }
      }
      double e = lattice_energy(state, potential);
      result.energy_trace.push_back(e);
      if (e < best_energy) {
        best_energy = e;
        best = state.labels;
      }
    }
  }
  result.labels = std::move(best);
  result.best_energy = best_energy;
  result.total_steps = t;
  return result;
}

RetrievalMethod parse_retrieval_method(const std::string& name) {
  if (name == "threshold") return RetrievalMethod::threshold;
  if (name == "bayes_pca" || name == "bayes-pca") return RetrievalMethod::bayes_pca;
  if (name == "bayes_gibbs" || name == "bayes-gibbs") return RetrievalMethod::bayes_gibbs;
  throw DomainError("unknown retrieval method: " + name);
}

std::string to_string(RetrievalMethod method) {
  switch (method) {
    case RetrievalMethod::threshold: return "threshold";
    case RetrievalMethod::bayes_pca: return "bayes_pca";
    default: return "bayes_gibbs";
  }
}

std::string RetrievalReport::to_text() const {
  std::ostringstream out;
  out << "method: " << sigrid::to_string(method) << "\n";
  out << "width: " << width << "\n";
  out << "height: " << height << "\n";
  out << "band: " << band << "\n";
  out << "frozen_fraction: " << format_double(frozen_fraction) << "\n";
  out << "thaw_fraction: " << format_double(thaw_fraction) << "\n";
  out << "runtime_seconds: " << format_double(runtime_seconds) << "\n";
  if (method != RetrievalMethod::threshold) {
    out << "steps: " << steps << "\n";
    out << "energy_initial: " << format_double(energy_initial) << "\n";
    out << "energy_best: " << format_double(energy_best) << "\n";
    out << "energy_trace:";
    for (double e : energy_trace) out << ' ' << format_double(e);
    out << "\n";
  }
  return out.str();
}

RetrievalResult retrieve_ft(const RasterField& field, std::size_t band,
                            RetrievalMethod method, const RetrievalParams& params,
                            std::uint64_t seed, int threads) {
  const auto start = std::chrono::steady_clock::now();
  field.validate();
  if (band >= field.bands) throw DomainError("band index out of range");

  std::vector<double> clipped =
      clip_percentile(field.band(band), params.min_pct, params.max_pct);
  std::vector<double> y = normalize_minmax(clipped);

  std::vector<std::uint8_t> labels;
  RetrievalReport report;
  report.method = method;
  report.width = field.width;
  report.height = field.height;
  report.band = band;

  if (method == RetrievalMethod::threshold) {
    labels = threshold_classify(y, params.threshold).labels;
  } else {
    MapSampler sampler =
        method == RetrievalMethod::bayes_pca ? MapSampler::pca : MapSampler::gibbs;
    MapResult map =
        map_estimate(y, field.height, field.width, params.posterior, sampler, seed, threads);
    labels = std::move(map.labels);
    report.steps = map.total_steps;
    report.energy_initial = map.energy_trace.front();
    report.energy_best = map.best_energy;
    report.energy_trace = std::move(map.energy_trace);
  }

  RetrievalResult result;
  result.map.width = field.width;
  result.map.height = field.height;
  result.map.bands = 1;
  result.map.samples.resize(labels.size());
  std::size_t thaw = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    result.map.samples[i] = labels[i] ? 1.0 : 0.0;
    thaw += labels[i];
  }
  report.thaw_fraction = double(thaw) / double(labels.size());
  report.frozen_fraction = double(labels.size() - thaw) / double(labels.size());
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.report = report;
  return result;
}

}  // namespace sigrid
