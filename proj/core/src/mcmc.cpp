#include "sigrid/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sigrid/parallel.hpp"

namespace sigrid {

namespace {

void check_site(std::size_t i, std::size_t n) {
  if (i >= n) throw DomainError("component index out of range");
}

}  // namespace

std::uint8_t heat_bath_label(double beta_times_field, std::span<const double> alphabet,
                             double u) {
  const std::size_t k = alphabet.size();
  if (k < 2 || k > 256) throw DomainError("alphabet size must be in [2,256]");
  double m = beta_times_field * alphabet[0];
  for (std::size_t v = 1; v < k; ++v) m = std::max(m, beta_times_field * alphabet[v]);
  double total = 0;
  double w[256];
  for (std::size_t v = 0; v < k; ++v) {
    w[v] = std::exp(beta_times_field * alphabet[v] - m);
    total += w[v];
  }
  double target = u * total;
  double cum = 0;
  for (std::size_t v = 0; v + 1 < k; ++v) {
    cum += w[v];
    if (target < cum) return std::uint8_t(v);
  }
  return std::uint8_t(k - 1);
}

void LatticeState::validate() const {
  if (labels.empty()) throw DomainError("lattice state needs at least one component");
  if (alphabet.size() < 2) throw DomainError("alphabet needs at least two values");
  if (alphabet.size() > 256) throw DomainError("alphabet is limited to 256 values");
  for (double v : alphabet)
    if (!std::isfinite(v)) throw DomainError("alphabet values must be finite");
  for (std::size_t a = 0; a < alphabet.size(); ++a)
    for (std::size_t b = a + 1; b < alphabet.size(); ++b)
      if (alphabet[a] == alphabet[b]) throw DomainError("alphabet values must be distinct");
  for (auto label : labels)
    if (label >= alphabet.size()) throw DomainError("state label outside the alphabet");
}

PairPotential PairPotential::from_dense(const std::vector<std::vector<double>>& coupling,
                                        std::vector<double> theta, double beta) {
  const std::size_t n = theta.size();
  if (coupling.size() != n) throw DomainError("coupling matrix size does not match theta");
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (coupling[i].size() != n) throw DomainError("coupling matrix must be square");
    if (coupling[i][i] != 0.0) throw DomainError("coupling diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (coupling[i][j] != coupling[j][i])
        throw DomainError("coupling matrix must be symmetric");
      if (coupling[i][j] != 0.0)
        adjacency[i].emplace_back(std::uint32_t(j), coupling[i][j]);
    }
  }
  PairPotential p;
  p.finish(adjacency, std::move(theta), beta);
  return p;
}

PairPotential PairPotential::from_triples(std::size_t n,
                                          std::span<const CouplingTriple> triples,
                                          std::vector<double> theta, double beta) {
  if (theta.size() != n) throw DomainError("theta length does not match component count");
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency(n);
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> seen;
  for (const auto& t : triples) {
    if (t.i >= n || t.j >= n) throw DomainError("coupling index out of range");
    if (t.i == t.j) throw DomainError("coupling diagonal must be zero");
    auto key = std::minmax(t.i, t.j);
    auto [it, inserted] = seen.emplace(std::pair{key.first, key.second}, t.value);
    if (!inserted) {
      if (it->second != t.value)
        throw DomainError("conflicting duplicate coupling for pair (" +
                          std::to_string(key.first) + "," + std::to_string(key.second) + ")");
      continue;  // identical duplicate, symmetric re-statement
    }
    if (t.value == 0.0) continue;
    adjacency[t.i].emplace_back(t.j, t.value);
    adjacency[t.j].emplace_back(t.i, t.value);
  }
  PairPotential p;
  p.finish(adjacency, std::move(theta), beta);
  return p;
}

void PairPotential::finish(std::vector<std::vector<std::pair<std::uint32_t, double>>>& adjacency,
                           std::vector<double> theta, double beta) {
  const std::size_t n = theta.size();
  if (n == 0) throw DomainError("potential needs at least one component");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("inverse temperature beta must be positive");
  for (double t : theta)
    if (!std::isfinite(t)) throw DomainError("theta values must be finite");

  row_ptr_.assign(n + 1, 0);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency[i].begin(), adjacency[i].end());
    nnz += adjacency[i].size();
    row_ptr_[i + 1] = nnz;
  }
  cols_.resize(nnz);
  weights_.resize(nnz);
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [j, v] : adjacency[i]) {
      if (!std::isfinite(v)) throw DomainError("coupling values must be finite");
      cols_[at] = j;
      weights_[at] = v;
      ++at;
    }
  }
  theta_ = std::move(theta);
  beta_ = beta;
}

void PairPotential::set_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("inverse temperature beta must be positive");
  beta_ = beta;
}

std::span<const std::uint32_t> PairPotential::neighbor_cols(std::size_t i) const {
  return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const double> PairPotential::neighbor_weights(std::size_t i) const {
  return {weights_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

double PairPotential::coupling(std::size_t i, std::size_t j) const {
  auto cols = neighbor_cols(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), std::uint32_t(j));
  if (it == cols.end() || *it != j) return 0.0;
  return neighbor_weights(i)[std::size_t(it - cols.begin())];
}

double local_field(const LatticeState& state, const PairPotential& model, std::size_t i) {
  check_site(i, model.size());
  auto cols = model.neighbor_cols(i);
  auto w = model.neighbor_weights(i);
  double h = model.theta(i);
  for (std::size_t a = 0; a < cols.size(); ++a) h += w[a] * state.spin(cols[a]);
  return h;
}

double lattice_energy(const LatticeState& state, const PairPotential& model) {
  double pair_term = 0;
  double field_term = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    double si = state.spin(i);
    auto cols = model.neighbor_cols(i);
    auto w = model.neighbor_weights(i);
    double acc = 0;
    for (std::size_t a = 0; a < cols.size(); ++a) acc += w[a] * state.spin(cols[a]);
    pair_term += si * acc;
    field_term += model.theta(i) * si;
  }
  return -0.5 * pair_term - field_term;
}

double energy_bound(const PairPotential& model, std::span<const double> alphabet) {
  double smax = 0;
  for (double v : alphabet) smax = std::max(smax, std::abs(v));
  double j_total = 0;
  for (std::size_t i = 0; i < model.size(); ++i)
    for (double w : model.neighbor_weights(i)) j_total += std::abs(w);
  double t_total = 0;
  for (double t : model.theta()) t_total += std::abs(t);
  return j_total * smax * smax + t_total * smax;
}

void pca_step_into(const LatticeState& src, LatticeState& dst, const PairPotential& model,
                   StepContext ctx, int threads) {
  if (&src == &dst)
    throw DomainError("pca_step_into needs distinct source and destination states");
  if (src.size() != model.size()) throw DomainError("state size does not match model");
  dst.alphabet = src.alphabet;
  dst.labels.resize(src.size());
  const CounterRng rng(ctx.seed);
  const double beta = model.beta();
  std::span<const double> alphabet = src.alphabet;
  parallel_for(0, src.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double h = local_field(src, model, i);
      double u = rng.uniform(ctx.step, i, 0);
      dst.labels[i] = heat_bath_label(beta * h, alphabet, u);
    }
  });
}

LatticeState pca_step(const LatticeState& state, const PairPotential& model,
                      StepContext ctx, int threads) {
  LatticeState next;
  pca_step_into(state, next, model, ctx, threads);
  return next;
}

LatticeState gibbs_step(const LatticeState& state, const PairPotential& model,
                        StepContext ctx, std::size_t i) {
  if (state.size() != model.size()) throw DomainError("state size does not match model");
  check_site(i, model.size());
  LatticeState next = state;
  const CounterRng rng(ctx.seed);
  double h = local_field(state, model, i);
  double u = rng.uniform(ctx.step, i, 0);
  next.labels[i] = heat_bath_label(model.beta() * h, state.alphabet, u);
  return next;
}

MetropolisResult metropolis_step(const LatticeState& state, const PairPotential& model,
                                 StepContext ctx, const SingleFlipProposal& proposal) {
  if (state.size() != model.size()) throw DomainError("state size does not match model");
  const std::size_t n = state.size();
  const std::size_t k = state.alphabet.size();
  if (!proposal.component_weights.empty() && proposal.component_weights.size() != n)
    throw DomainError("component weight count must match the component count");
  if (!proposal.value_weights.empty() && proposal.value_weights.size() != k)
    throw DomainError("value weight count must match the alphabet size");

  const CounterRng rng(ctx.seed);
  constexpr auto chain = CounterRng::kChainStream;

  // Component pick.
  std::size_t site;
  if (proposal.component_weights.empty()) {
    site = std::size_t(rng.uniform_int(ctx.step, chain, 0, n));
  } else {
    double total = 0;
    for (double w : proposal.component_weights) {
      if (!(w >= 0)) throw DomainError("proposal weights must be nonnegative");
      total += w;
    }
    if (!(total > 0)) throw DomainError("proposal weights must not all vanish");
    double target = rng.uniform(ctx.step, chain, 0) * total;
    double cum = 0;
    site = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += proposal.component_weights[i];
      if (target < cum) {
        site = i;
        break;
      }
    }
  }

  // Proposed label among the k-1 others; non-uniform weights renormalize over
  // the complement, which is what the Hastings correction below accounts for.
  const std::uint8_t current = state.labels[site];
  std::uint8_t proposed = current;
  double log_hastings = 0;
  if (proposal.value_weights.empty()) {
    std::size_t pick = std::size_t(rng.uniform_int(ctx.step, chain, 1, k - 1));
    proposed = std::uint8_t(pick < current ? pick : pick + 1);
  } else {
    double total = 0;
    for (std::size_t v = 0; v < k; ++v) {
      if (!(proposal.value_weights[v] >= 0))
        throw DomainError("proposal weights must be nonnegative");
      if (v != current) total += proposal.value_weights[v];
    }
    if (!(total > 0)) throw DomainError("proposal weights must not all vanish");
    double target = rng.uniform(ctx.step, chain, 1) * total;
    double cum = 0;
    for (std::size_t v = 0; v < k; ++v) {
      if (v == current) continue;
      cum += proposal.value_weights[v];
      proposed = std::uint8_t(v);
      if (target < cum) break;
    }
    double fwd_total = total;
    double rev_total = 0;
    for (std::size_t v = 0; v < k; ++v)
      if (v != proposed) rev_total += proposal.value_weights[v];
    double q_fwd = proposal.value_weights[proposed] / fwd_total;
    double q_rev = proposal.value_weights[current] / rev_total;
    if (!(q_rev > 0)) throw DomainError("proposal cannot return from the proposed state");
    log_hastings = std::log(q_rev) - std::log(q_fwd);
  }

  double h = local_field(state, model, site);
  double delta_e = -(state.alphabet[proposed] - state.alphabet[current]) * h;
  double log_accept = -model.beta() * delta_e + log_hastings;

  MetropolisResult result{state, false};
  if (log_accept >= 0.0 ||
      rng.uniform(ctx.step, chain, 2) < std::exp(log_accept)) {
    result.state.labels[site] = proposed;
    result.accepted = true;
  }
  return result;
}

std::size_t state_index(const LatticeState& state) {
  const std::size_t k = state.alphabet.size();
  std::size_t index = 0;
  for (std::size_t i = state.size(); i-- > 0;) index = index * k + state.labels[i];
  return index;
}

void assign_state(LatticeState& state, std::size_t index) {
  const std::size_t k = state.alphabet.size();
  for (std::size_t i = 0; i < state.size(); ++i) {
    state.labels[i] = std::uint8_t(index % k);
    index /= k;
  }
}

std::size_t enumerable_states(std::size_t n, std::size_t k, std::size_t max_states) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > max_states / k) return 0;
    total *= k;
  }
  return total <= max_states ? total : 0;
}

std::vector<double> pca_stationary_exact(const PairPotential& model,
                                         std::span<const double> alphabet) {
  const std::size_t n = model.size();
  const std::size_t k = alphabet.size();
  const std::size_t states = enumerable_states(n, k);
  if (states == 0) throw DomainError("state space too large to enumerate");

  LatticeState scratch;
  scratch.alphabet.assign(alphabet.begin(), alphabet.end());
  scratch.labels.assign(n, 0);
  scratch.validate();

  const double beta = model.beta();
  std::vector<double> log_w(states);
  double log_max = -1e300;
  for (std::size_t s = 0; s < states; ++s) {
    assign_state(scratch, s);
    double field_term = 0;
    double log_z = 0;
    for (std::size_t i = 0; i < n; ++i) {
      field_term += model.theta(i) * scratch.spin(i);
      double h = local_field(scratch, model, i);
      // log sum_v exp(beta*h*v) with max-subtraction
      double m = beta * h * alphabet[0];
      for (std::size_t v = 1; v < k; ++v) m = std::max(m, beta * h * alphabet[v]);
      double acc = 0;
      for (std::size_t v = 0; v < k; ++v) acc += std::exp(beta * h * alphabet[v] - m);
      log_z += m + std::log(acc);
    }
    log_w[s] = beta * field_term + log_z;
    log_max = std::max(log_max, log_w[s]);
  }
  std::vector<double> pi(states);
  double total = 0;
  for (std::size_t s = 0; s < states; ++s) {
    pi[s] = std::exp(log_w[s] - log_max);
    total += pi[s];
  }
  for (double& p : pi) p /= total;
  return pi;
}

std::vector<double> gibbs_measure_exact(const PairPotential& model,
                                        std::span<const double> alphabet) {
  const std::size_t n = model.size();
  const std::size_t states = enumerable_states(n, alphabet.size());
  if (states == 0) throw DomainError("state space too large to enumerate");

  LatticeState scratch;
  scratch.alphabet.assign(alphabet.begin(), alphabet.end());
  scratch.labels.assign(n, 0);
  scratch.validate();

  std::vector<double> log_w(states);
  double log_max = -1e300;
  for (std::size_t s = 0; s < states; ++s) {
    assign_state(scratch, s);
    log_w[s] = -model.beta() * lattice_energy(scratch, model);
    log_max = std::max(log_max, log_w[s]);
  }
  std::vector<double> pi(states);
  double total = 0;
  for (std::size_t s = 0; s < states; ++s) {
    pi[s] = std::exp(log_w[s] - log_max);
    total += pi[s];
  }
  for (double& p : pi) p /= total;
  return pi;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("tv_distance: support size mismatch");
  if (p.empty()) throw DomainError("tv_distance: empty distributions");
  double sp = 0, sq = 0, acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
    acc += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw DomainError("tv_distance: inputs must sum to 1");
  return 0.5 * acc;
}

StepperKind parse_stepper_kind(const std::string& name) {
  if (name == "pca") return StepperKind::pca;
  if (name == "gibbs") return StepperKind::gibbs;
  if (name == "metropolis") return StepperKind::metropolis;
  throw DomainError("unknown stepper kind: " + name);
}

std::string to_string(StepperKind kind) {
  switch (kind) {
    case StepperKind::pca: return "pca";
    case StepperKind::gibbs: return "gibbs";
    default: return "metropolis";
  }
}

ChainDiagnostics run_chain(const LatticeState& initial, const PairPotential& model,
                           StepperKind stepper, std::size_t steps, std::size_t burn_in,
                           std::size_t thin, std::uint64_t seed, int threads) {
  initial.validate();
  if (initial.size() != model.size()) throw DomainError("state size does not match model");
  if (steps <= burn_in) throw DomainError("steps must exceed burn_in");
  if (thin < 1) throw DomainError("thin must be at least 1");

  const std::size_t n = initial.size();
  const std::size_t k = initial.alphabet.size();
  const std::size_t states = enumerable_states(n, k);

  ChainDiagnostics diag;
  diag.steps = steps;
  std::vector<std::size_t> counts;
  if (states != 0) counts.assign(states, 0);

  const CounterRng rng(seed);
  LatticeState state = initial;
  LatticeState buffer = initial;  // PCA double-buffer
  std::size_t accepted = 0;

  for (std::size_t t = 0; t < steps; ++t) {
    StepContext ctx{seed, t};
    switch (stepper) {
      case StepperKind::pca:
        pca_step_into(state, buffer, model, ctx, threads);
        std::swap(state, buffer);
        break;
      case StepperKind::gibbs: {
        std::size_t i = std::size_t(rng.uniform_int(t, CounterRng::kChainStream, 3, n));
        double h = local_field(state, model, i);
        double u = rng.uniform(t, i, 0);
        state.labels[i] = heat_bath_label(model.beta() * h, state.alphabet, u);
        break;
      }
      case StepperKind::metropolis: {
        MetropolisResult r = metropolis_step(state, model, ctx);
        state = std::move(r.state);
        if (r.accepted) ++accepted;
        break;
      }
    }
    if (t >= burn_in && (t - burn_in) % thin == 0) {
      ++diag.recorded;
      diag.energy_trace.push_back(lattice_energy(state, model));
      if (states != 0) ++counts[state_index(state)];
    }
  }

  diag.acceptance_rate =
      stepper == StepperKind::metropolis ? double(accepted) / double(steps) : 1.0;
  if (states != 0) {
    diag.empirical.resize(states);
    for (std::size_t s = 0; s < states; ++s)
      diag.empirical[s] = double(counts[s]) / double(diag.recorded);
  }
  diag.final_state = std::move(state);
  return diag;
}

namespace {

// Token stream over the model file with '#' comments stripped.
struct TokenStream {
  std::istringstream in;
  explicit TokenStream(std::string text) : in(std::move(text)) {}

  std::string next(const char* what) {
    std::string tok;
    if (!(in >> tok)) throw FormatError(std::string("model file: missing ") + what);
    return tok;
  }
  long long integer(const char* what) {
    std::string tok = next(what);
    try {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw FormatError(std::string("model file: bad integer for ") + what + ": " + tok);
    }
  }
  double real(const char* what) {
    std::string tok = next(what);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      if (!std::isfinite(v)) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw FormatError(std::string("model file: bad number for ") + what + ": " + tok);
    }
  }
  void expect(const char* literal) {
    std::string tok = next(literal);
    if (tok != literal)
      throw FormatError(std::string("model file: expected '") + literal + "', got '" + tok + "'");
  }
};

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '#') in_comment = true;
    if (c == '\n') in_comment = false;
    out.push_back(in_comment ? ' ' : c);
  }
  return out;
}

}  // namespace

LatticeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  TokenStream tokens(strip_comments(buf.str()));

  tokens.expect("MODEL");
  if (tokens.integer("version") != 1) throw FormatError("model file: unsupported version");
  tokens.expect("N");
  long long n = tokens.integer("N");
  if (n < 1) throw FormatError("model file: N must be positive");
  tokens.expect("K");
  long long k = tokens.integer("K");
  if (k < 2 || k > 256) throw FormatError("model file: K must be in [2,256]");
  tokens.expect("ALPHABET");
  std::vector<double> alphabet;
  for (long long i = 0; i < k; ++i) alphabet.push_back(tokens.real("alphabet value"));
  tokens.expect("BETA");
  double beta = tokens.real("beta");
  tokens.expect("THETA");
  std::vector<double> theta;
  for (long long i = 0; i < n; ++i) theta.push_back(tokens.real("theta value"));

  std::vector<CouplingTriple> triples;
  while (true) {
    std::string tok;
    if (!(tokens.in >> tok)) break;
    if (tok != "J") throw FormatError("model file: expected 'J', got '" + tok + "'");
    CouplingTriple t;
    long long i = tokens.integer("coupling row");
    long long j = tokens.integer("coupling column");
    if (i < 0 || j < 0) throw FormatError("model file: coupling indices must be nonnegative");
    t.i = std::uint32_t(i);
    t.j = std::uint32_t(j);
    t.value = tokens.real("coupling value");
    triples.push_back(t);
  }

  LatticeModel model;
  model.alphabet = alphabet;
  try {
    model.potential = PairPotential::from_triples(std::size_t(n), triples,
                                                  std::move(theta), beta);
  } catch (const DomainError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }

  LatticeState probe;
  probe.alphabet = model.alphabet;
  probe.labels.assign(std::size_t(n), 0);
  try {
    probe.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return model;
}

void save_model(const LatticeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open model file for writing: " + path.string());
  out.precision(17);
  const std::size_t n = model.potential.size();
  out << "MODEL 1\n";
  out << "N " << n << "\n";
  out << "K " << model.alphabet.size() << "\n";
  out << "ALPHABET";
  for (double v : model.alphabet) out << ' ' << v;
  out << "\nBETA " << model.potential.beta() << "\n";
  out << "THETA";
  for (double t : model.potential.theta()) out << ' ' << t;
  out << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    auto cols = model.potential.neighbor_cols(i);
    auto w = model.potential.neighbor_weights(i);
    for (std::size_t a = 0; a < cols.size(); ++a)
      if (cols[a] > i) out << "J " << i << ' ' << cols[a] << ' ' << w[a] << "\n";
  }
  if (!out) throw IoError("write failure: " + path.string());
}

}  // namespace sigrid
