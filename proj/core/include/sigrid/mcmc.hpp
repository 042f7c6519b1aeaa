#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sigrid/errors.hpp"
#include "sigrid/rng.hpp"

namespace sigrid {

// Configuration over a finite alphabet of real spin values; labels index the
// alphabet.
struct LatticeState {
  std::vector<double> alphabet;       // k >= 2 distinct finite values
  std::vector<std::uint8_t> labels;   // one per component, each < k

  std::size_t size() const { return labels.size(); }
  double spin(std::size_t i) const { return alphabet[labels[i]]; }

  void validate() const;
};

struct CouplingTriple {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double value = 0;
};

// Symmetric pair couplings J (zero diagonal, stored sparse), external field
// theta, and inverse temperature beta. Defines the local fields
// h_i(s) = sum_j J[i][j]*s_j + theta_i and the energy
// E(s) = -s'Js/2 - theta's.
class PairPotential {
 public:
  // A default-constructed potential is empty; build real ones through the
  // factories below.
  PairPotential() = default;

  static PairPotential from_dense(const std::vector<std::vector<double>>& coupling,
                                  std::vector<double> theta, double beta);
  static PairPotential from_triples(std::size_t n, std::span<const CouplingTriple> triples,
                                    std::vector<double> theta, double beta);

  std::size_t size() const { return theta_.size(); }
  double beta() const { return beta_; }
  void set_beta(double beta);

  double theta(std::size_t i) const { return theta_[i]; }
  std::span<const double> theta() const { return theta_; }

  // Neighbors of i as parallel (column, weight) spans.
  std::span<const std::uint32_t> neighbor_cols(std::size_t i) const;
  std::span<const double> neighbor_weights(std::size_t i) const;

  double coupling(std::size_t i, std::size_t j) const;  // 0 when absent
  std::size_t coupling_count() const { return cols_.size() / 2; }  // unordered pairs

 private:
  void finish(std::vector<std::vector<std::pair<std::uint32_t, double>>>& adjacency,
              std::vector<double> theta, double beta);

  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
  std::vector<double> theta_;
  double beta_ = 1.0;
};

double local_field(const LatticeState& state, const PairPotential& model, std::size_t i);
double lattice_energy(const LatticeState& state, const PairPotential& model);

// Heat-bath label draw from p(v) ~ exp(beta_times_field * alphabet[v]) via
// inverse CDF in label order; exponents are max-subtracted, so any beta*h is
// safe. u must lie in [0,1).
std::uint8_t heat_bath_label(double beta_times_field, std::span<const double> alphabet,
                             double u);

// Bound on |sum_i h_i(s) t_i| over all state pairs; validates the overflow
// guard in the exponentials.
double energy_bound(const PairPotential& model, std::span<const double> alphabet);

// Randomness context of one chain step; all draws inside the step are pure
// functions of (seed, step, component, draw).
struct StepContext {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

// Synchronous update: every component resamples from e^{beta*h_i(s)*v},
// reading the same previous state. Bit-identical for any thread count.
LatticeState pca_step(const LatticeState& state, const PairPotential& model,
                      StepContext ctx, int threads = 1);
void pca_step_into(const LatticeState& src, LatticeState& dst, const PairPotential& model,
                   StepContext ctx, int threads = 1);

// Heat-bath resample of component i from its exact conditional under the
// Gibbs measure; other components unchanged.
LatticeState gibbs_step(const LatticeState& state, const PairPotential& model,
                        StepContext ctx, std::size_t i);

// Single-component proposal distribution; empty weight vectors mean uniform.
// component_weights has one entry per component, value_weights one per
// alphabet label (the current label is excluded and the rest renormalized).
// Non-uniform weights turn the Metropolis acceptance into the
// Metropolis-Hastings ratio.
struct SingleFlipProposal {
  std::vector<double> component_weights;
  std::vector<double> value_weights;
};

struct MetropolisResult {
  LatticeState state;
  bool accepted = false;
};

MetropolisResult metropolis_step(const LatticeState& state, const PairPotential& model,
                                 StepContext ctx, const SingleFlipProposal& proposal = {});

// State <-> flat index over the k^N state space, component 0 least
// significant.
std::size_t state_index(const LatticeState& state);
void assign_state(LatticeState& state, std::size_t index);

// k^N when it fits below max_states, otherwise 0.
std::size_t enumerable_states(std::size_t n, std::size_t k,
                              std::size_t max_states = std::size_t(1) << 20);

// Exact stationary distribution of the synchronous chain:
// pi(s) proportional to e^{beta*theta's} * Z_s with Z_s = sum_t e^{-beta*H(s,t)}.
// Requires k^N <= 2^20.
std::vector<double> pca_stationary_exact(const PairPotential& model,
                                         std::span<const double> alphabet);

// Brute-force Gibbs measure pi(s) proportional to e^{-beta*E(s)}; the
// stationary target of the single-flip samplers. Requires k^N <= 2^20.
std::vector<double> gibbs_measure_exact(const PairPotential& model,
                                        std::span<const double> alphabet);

double tv_distance(std::span<const double> p, std::span<const double> q);

enum class StepperKind { pca, gibbs, metropolis };

StepperKind parse_stepper_kind(const std::string& name);
std::string to_string(StepperKind kind);

struct ChainDiagnostics {
  std::size_t steps = 0;
  std::size_t recorded = 0;
  double acceptance_rate = 1.0;        // < 1 only for metropolis
  std::vector<double> empirical;       // k^N distribution; empty if not enumerable
  std::vector<double> energy_trace;    // energy at each recorded sample
  LatticeState final_state;
};

// Runs `steps` stepper applications and records every `thin`-th state after
// `burn_in`. For gibbs the component is drawn uniformly each step. Output
// depends only on (seed, parameters), never on the thread count.
ChainDiagnostics run_chain(const LatticeState& initial, const PairPotential& model,
                           StepperKind stepper, std::size_t steps, std::size_t burn_in,
                           std::size_t thin, std::uint64_t seed, int threads = 1);

// Model container bundling the potential with the spin alphabet.
struct LatticeModel {
  PairPotential potential;
  std::vector<double> alphabet;
};

// Structured text: "MODEL 1", then N, K, ALPHABET (K reals), BETA,
// THETA (N reals), and one "J i j value" triple per coupling. '#' starts a
// comment; symmetry is enforced on load.
LatticeModel load_model(const std::filesystem::path& path);
void save_model(const LatticeModel& model, const std::filesystem::path& path);

}  // namespace sigrid
