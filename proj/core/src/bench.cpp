#include "sigrid/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sigrid {

namespace {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bench report: bad number '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bench report: bad integer '" + s + "'");
  }
}

// "key: value" splitter; returns false when the line has no colon.
bool split_kv(const std::string& line, std::string& key, std::string& value) {
  std::size_t pos = line.find(':');
  if (pos == std::string::npos) return false;
  key = line.substr(0, pos);
  value = line.substr(pos + 1);
  while (!value.empty() && value.front() == ' ') value.erase(value.begin());
  return true;
}

}  // namespace

std::string BenchReport::to_text() const {
  std::ostringstream out;
  out << "SIGRID-BENCH 1\n";
  out << "kind: " << kind << "\n";
  out << "N: " << n_components << "\n";
  out << "k: " << alphabet_size << "\n";
  out << "steps: " << steps << "\n";
  out << "replicas: " << replicas << "\n";
  out << "seed: " << seed << "\n";
  out << "threads_used: " << threads_used << "\n";
  out << "states_identical: " << (states_identical ? 1 : 0) << "\n";
  for (const auto& m : mixing) {
    out << "trace: " << sigrid::to_string(m.method) << "\n";
    out << "ns_per_step: " << format_double(m.ns_per_step) << "\n";
    out << "step,tv\n";
    for (const auto& p : m.trace)
      out << p.step << ',' << format_double(p.tv) << "\n";
    out << "end_trace\n";
  }
  if (!throughput.empty()) {
    out << "table: throughput\n";
    out << "threads,ns_per_step,speedup\n";
    for (const auto& p : throughput)
      out << p.threads << ',' << format_double(p.ns_per_step) << ','
          << format_double(p.speedup) << "\n";
    out << "end_table\n";
  }
  return out.str();
}

BenchReport BenchReport::parse_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "SIGRID-BENCH 1")
    throw FormatError("bench report: missing magic line");

  BenchReport report;
  std::string key, value;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!split_kv(line, key, value)) throw FormatError("bench report: bad line '" + line + "'");
    if (key == "kind") {
      report.kind = value;
    } else if (key == "N") {
      report.n_components = parse_u64(value);
    } else if (key == "k") {
      report.alphabet_size = parse_u64(value);
    } else if (key == "steps") {
      report.steps = parse_u64(value);
    } else if (key == "replicas") {
      report.replicas = parse_u64(value);
    } else if (key == "seed") {
      report.seed = parse_u64(value);
    } else if (key == "threads_used") {
      report.threads_used = int(parse_u64(value));
    } else if (key == "states_identical") {
      report.states_identical = value == "1";
    } else if (key == "trace") {
      MixingTrace trace;
      trace.method = parse_stepper_kind(value);
      if (!std::getline(in, line) || !split_kv(line, key, value) || key != "ns_per_step")
        throw FormatError("bench report: trace missing ns_per_step");
      trace.ns_per_step = parse_double(value);
      if (!std::getline(in, line) || line != "step,tv")
        throw FormatError("bench report: trace missing column header");
      while (std::getline(in, line) && line != "end_trace") {
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
          throw FormatError("bench report: bad trace row '" + line + "'");
        trace.trace.push_back(
            {parse_u64(line.substr(0, comma)), parse_double(line.substr(comma + 1))});
      }
      report.mixing.push_back(std::move(trace));
    } else if (key == "table") {
      if (!std::getline(in, line) || line != "threads,ns_per_step,speedup")
        throw FormatError("bench report: table missing column header");
      while (std::getline(in, line) && line != "end_table") {
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
          throw FormatError("bench report: bad table row '" + line + "'");
        ThroughputPoint p;
        p.threads = int(parse_u64(line.substr(0, c1)));
        p.ns_per_step = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
        p.speedup = parse_double(line.substr(c2 + 1));
        report.throughput.push_back(p);
      }
    } else {
      throw FormatError("bench report: unknown key '" + key + "'");
    }
  }
  return report;
}

BenchReport bench_mixing(const LatticeModel& model, std::span<const StepperKind> methods,
                         std::size_t steps, std::size_t replicas, std::uint64_t seed) {
  const std::size_t n = model.potential.size();
  const std::size_t k = model.alphabet.size();
  const std::size_t states = enumerable_states(n, k, std::size_t(1) << 16);
  if (states == 0)
    throw DomainError("bench_mixing needs an enumerable model (k^N <= 2^16)");
  if (steps == 0) throw DomainError("bench_mixing needs at least one step");
  if (replicas == 0) throw DomainError("bench_mixing needs at least one replica");

  BenchReport report;
  report.kind = "mixing";
  report.n_components = n;
  report.alphabet_size = k;
  report.steps = steps;
  report.replicas = replicas;
  report.seed = seed;
  report.threads_used = 1;

  LatticeState init;
  init.alphabet = model.alphabet;
  init.labels.assign(n, 0);
  init.validate();

  const CounterRng master(seed);
  for (std::size_t m_idx = 0; m_idx < methods.size(); ++m_idx) {
    const StepperKind method = methods[m_idx];
    std::vector<double> target = method == StepperKind::pca
                                     ? pca_stationary_exact(model.potential, model.alphabet)
                                     : gibbs_measure_exact(model.potential, model.alphabet);

    std::vector<LatticeState> chains(replicas, init);
    std::vector<std::uint64_t> chain_seeds(replicas);
    for (std::size_t r = 0; r < replicas; ++r)
      chain_seeds[r] = master.bits(r, CounterRng::kChainStream, std::uint32_t(1000 + m_idx));

    MixingTrace trace;
    trace.method = method;
    std::vector<double> empirical(states);

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t r = 0; r < replicas; ++r) {
        LatticeState& chain = chains[r];
        StepContext ctx{chain_seeds[r], t};
        switch (method) {
          case StepperKind::pca: {
            chain = pca_step(chain, model.potential, ctx, 1);
            break;
          }
          case StepperKind::gibbs: {
            const CounterRng rng(chain_seeds[r]);
            std::size_t i = std::size_t(rng.uniform_int(t, CounterRng::kChainStream, 3, n));
            chain = gibbs_step(chain, model.potential, ctx, i);
            break;
          }
          case StepperKind::metropolis: {
            chain = metropolis_step(chain, model.potential, ctx).state;
            break;
          }
        }
      }
      std::fill(empirical.begin(), empirical.end(), 0.0);
      for (std::size_t r = 0; r < replicas; ++r)
        empirical[state_index(chains[r])] += 1.0 / double(replicas);
      trace.trace.push_back({t + 1, tv_distance(empirical, target)});
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    double total_ns = double(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count());
    trace.ns_per_step = std::max(total_ns / double(steps * replicas), 1e-3);
    report.mixing.push_back(std::move(trace));
  }
  return report;
}

BenchReport bench_throughput(std::size_t n, std::span<const int> thread_counts,
                             std::size_t steps, std::uint64_t seed) {
  if (n < 2) throw DomainError("bench_throughput needs at least two sites");
  if (steps == 0) throw DomainError("bench_throughput needs at least one step");
  if (thread_counts.empty()) throw DomainError("bench_throughput needs thread counts");

  // Ferromagnetic ring, zero field.
  std::vector<CouplingTriple> triples;
  triples.reserve(n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    triples.push_back({std::uint32_t(i), std::uint32_t(i + 1), 1.0});
  if (n > 2) triples.push_back({0, std::uint32_t(n - 1), 1.0});
  PairPotential potential =
      PairPotential::from_triples(n, triples, std::vector<double>(n, 0.0), 0.5);

  LatticeState init;
  init.alphabet = {-1.0, 1.0};
  init.labels.assign(n, 0);

  BenchReport report;
  report.kind = "throughput";
  report.n_components = n;
  report.alphabet_size = 2;
  report.steps = steps;
  report.seed = seed;
  report.threads_used = *std::max_element(thread_counts.begin(), thread_counts.end());

  std::vector<std::uint8_t> reference_labels;
  for (int threads : thread_counts) {
    if (threads < 1) throw DomainError("thread counts must be positive");
    LatticeState state = init;
    LatticeState buffer = init;
    std::uint64_t t = 0;
    for (; t < 3; ++t) {  // warm-up, excluded from timing
      pca_step_into(state, buffer, potential, {seed, t}, threads);
      std::swap(state, buffer);
    }
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t done = 0; done < steps; ++done, ++t) {
      pca_step_into(state, buffer, potential, {seed, t}, threads);
      std::swap(state, buffer);
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    double total_ns = double(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count());

    ThroughputPoint point;
    point.threads = threads;
    point.ns_per_step = std::max(total_ns / double(steps), 1.0);
    report.throughput.push_back(point);

    if (reference_labels.empty()) {
      reference_labels = state.labels;
    } else if (state.labels != reference_labels) {
      report.states_identical = false;
    }
  }

  double base = report.throughput.front().ns_per_step;
  for (const auto& p : report.throughput)
    if (p.threads == 1) base = p.ns_per_step;
  for (auto& p : report.throughput) p.speedup = p.threads == 1 ? 1.0 : base / p.ns_per_step;
  return report;
}

}  // namespace sigrid
