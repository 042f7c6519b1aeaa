// sigrid: raster preprocessing, sigmoidal grid operators, and MCMC retrieval
// from one command-line entry point.
//
// Exit codes: 0 ok, 2 usage, 10-19 domain errors (12: steps must exceed
// burn_in, 13: numerical failure), 20-29 I/O errors (21: malformed file).

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "sigrid/bench.hpp"
#include "sigrid/inversion.hpp"
#include "sigrid/mcmc.hpp"
#include "sigrid/operators.hpp"
#include "sigrid/raster.hpp"
#include "sigrid/retrieval.hpp"

namespace {

struct CliError {
  int code;
  std::string message;
};

std::string num10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Effective-config header: every value actually used, echoed losslessly so a
// rerun with these values reproduces the output bit-exactly.
class ConfigEcho {
 public:
  explicit ConfigEcho(std::string command) : command_(std::move(command)) {}
  void add(const std::string& key, const std::string& value) {
    rows_.emplace_back(key, value);
  }
  void add(const std::string& key, double value) { add(key, num17(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void print() const {
    std::cout << "# config " << command_ << "\n";
    for (const auto& [k, v] : rows_) std::cout << k << " = " << v << "\n";
    std::cout << "# end\n";
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> rows_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<sigrid::BetaPhase> parse_schedule(const std::string& text) {
  std::vector<sigrid::BetaPhase> schedule;
  for (const std::string& part : split(text, ',')) {
    auto fields = split(part, ':');
    if (fields.size() != 2)
      throw CliError{10, "bad schedule entry '" + part + "' (want beta:steps)"};
    try {
      schedule.push_back({std::stod(fields[0]), std::stoul(fields[1])});
    } catch (const std::exception&) {
      throw CliError{10, "bad schedule entry '" + part + "'"};
    }
  }
  return schedule;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw sigrid::IoError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw sigrid::IoError("write failure: " + path);
}

sigrid::ScalarField named_field(const std::string& name) {
  using std::numbers::pi;
  if (name == "const")
    return [](std::span<const double>) { return 3.7; };
  if (name == "linear")
    return [](std::span<const double> x) {
      double acc = 0.25;
      for (double xi : x) acc += 0.5 * xi;
      return acc;
    };
  if (name == "sin2pi")
    return [](std::span<const double> x) {
      double acc = 1.0;
      for (double xi : x) acc *= std::sin(2.0 * pi * xi);
      return acc;
    };
  if (name == "gauss_bump")
    return [](std::span<const double> x) {
      double r2 = 0;
      for (double xi : x) r2 += (xi - 0.5) * (xi - 0.5);
      return std::exp(-r2 / 0.045);
    };
  throw CliError{10, "unknown field '" + name + "' (const, linear, sin2pi, gauss_bump)"};
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string input;
  long long band = -1;  // -1: all bands
};

int cmd_stats(const StatsArgs& args) {
  ConfigEcho echo("stats");
  echo.add("input", args.input);
  echo.add("band", args.band);
  echo.print();

  sigrid::RasterField field = sigrid::load_raster(args.input);
  auto print_band = [&](std::size_t b) {
    sigrid::BandStats s = sigrid::band_stats(field, b);
    std::cout << "band " << b;
    if (!field.band_names.empty()) std::cout << " (" << field.band_names[b] << ")";
    std::cout << ":\n";
    std::cout << "  min = " << num10(s.min) << "\n";
    std::cout << "  max = " << num10(s.max) << "\n";
    std::cout << "  mean = " << num10(s.mean) << "\n";
    std::cout << "  std = " << num10(s.std) << "\n";
  };
  if (args.band < 0) {
    for (std::size_t b = 0; b < field.bands; ++b) print_band(b);
  } else {
    print_band(std::size_t(args.band));
  }
  return 0;
}

struct PrepArgs {
  std::string input;
  std::string output;
  double min_pct = 2.0;
  double max_pct = 98.0;
};

int cmd_prep(const PrepArgs& args) {
  ConfigEcho echo("prep");
  echo.add("input", args.input);
  echo.add("output", args.output);
  echo.add("min-pct", args.min_pct);
  echo.add("max-pct", args.max_pct);
  echo.print();

  sigrid::RasterField field = sigrid::load_raster(args.input);
  for (std::size_t b = 0; b < field.bands; ++b) {
    auto band = field.band(b);
    std::vector<double> clipped =
        sigrid::clip_percentile(band, args.min_pct, args.max_pct);
    std::cout << "band " << b << ": clip ["
              << num10(sigrid::percentile(band, args.min_pct)) << ", "
              << num10(sigrid::percentile(band, args.max_pct)) << "]\n";
    std::vector<double> normalized = sigrid::normalize_minmax(clipped);
    std::copy(normalized.begin(), normalized.end(), band.begin());
  }
  sigrid::save_raster(field, args.output);
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

struct RescaleArgs {
  std::string input;
  std::string output;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string form = "discrete";
  std::string sigmoid = "logistic";
  double steepness = 1.0;
  long long band = -1;
  int threads = 0;
};

int cmd_rescale(const RescaleArgs& args) {
  ConfigEcho echo("rescale");
  echo.add("input", args.input);
  echo.add("output", args.output);
  echo.add("width", std::uint64_t(args.width));
  echo.add("height", std::uint64_t(args.height));
  echo.add("form", args.form);
  echo.add("sigmoid", args.sigmoid);
  echo.add("steepness", args.steepness);
  echo.add("band", args.band);
  echo.add("threads", args.threads);
  echo.print();

  sigrid::OperatorForm form = sigrid::parse_operator_form(args.form);
  sigrid::SigmoidSpec sigmoid{sigrid::parse_sigmoid_kind(args.sigmoid), args.steepness};
  sigrid::RasterField field = sigrid::load_raster(args.input);

  std::vector<std::size_t> bands;
  if (args.band < 0) {
    for (std::size_t b = 0; b < field.bands; ++b) bands.push_back(b);
  } else {
    bands.push_back(std::size_t(args.band));
  }

  sigrid::RasterField out;
  out.width = args.width;
  out.height = args.height;
  out.bands = bands.size();
  if (!field.band_names.empty())
    for (std::size_t b : bands) out.band_names.push_back(field.band_names[b]);
  out.samples.reserve(args.width * args.height * bands.size());
  for (std::size_t b : bands) {
    sigrid::RasterField single = sigrid::rescale_raster(
        field, b, args.width, args.height, form, sigmoid, args.threads);
    out.samples.insert(out.samples.end(), single.samples.begin(), single.samples.end());
  }
  sigrid::save_raster(out, args.output);
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

struct InvertDemoArgs {
  unsigned n = 8;
  unsigned d = 1;
  std::string sigmoid = "logistic";
  double steepness = 16.0;
  std::string form = "discrete";
  std::string field = "sin2pi";
  double tol = 1e-10;
  std::uint64_t max_iter = 200000;
  unsigned quad = 4;
};

int cmd_invert_demo(const InvertDemoArgs& args) {
  ConfigEcho echo("invert-demo");
  echo.add("n", std::uint64_t(args.n));
  echo.add("d", std::uint64_t(args.d));
  echo.add("sigmoid", args.sigmoid);
  echo.add("steepness", args.steepness);
  echo.add("form", args.form);
  echo.add("field", args.field);
  echo.add("tol", args.tol);
  echo.add("max-iter", args.max_iter);
  echo.add("quad", std::uint64_t(args.quad));
  echo.print();

  if (args.d < 1 || args.d > 3) throw CliError{10, "dimension must be 1, 2, or 3"};
  sigrid::OperatorConfig config;
  for (unsigned i = 0; i < args.d; ++i) config.domain.bounds.emplace_back(0.0, 1.0);
  config.n = args.n;
  config.sigmoid = {sigrid::parse_sigmoid_kind(args.sigmoid), args.steepness};
  config.form = sigrid::parse_operator_form(args.form);

  sigrid::RoundtripReport report = sigrid::roundtrip_error(
      config, named_field(args.field), args.tol, args.max_iter, args.quad);
  std::cout << "forward_sup_error = " << num10(report.forward_sup_error) << "\n";
  std::cout << "inversion_residual = " << num10(report.inversion_residual) << "\n";
  std::cout << "recovery_error = " << num10(report.recovery_error) << "\n";
  std::cout << "iterations = " << report.iterations << "\n";
  std::cout << "dominance_margin = " << num10(report.dominance_margin) << "\n";
  std::cout << "method = " << (report.used_direct ? "direct" : "iterative") << "\n";
  return 0;
}

struct SampleArgs {
  std::string model;
  std::string method = "pca";
  std::uint64_t steps = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

int cmd_sample(const SampleArgs& args) {
  ConfigEcho echo("sample");
  echo.add("model", args.model);
  echo.add("method", args.method);
  echo.add("steps", args.steps);
  echo.add("burn-in", args.burn_in);
  echo.add("thin", args.thin);
  echo.add("seed", args.seed);
  echo.add("out", args.out);
  echo.add("threads", args.threads);
  echo.print();

  if (args.steps <= args.burn_in) throw CliError{12, "steps must exceed burn_in"};
  if (args.thin < 1) throw CliError{10, "thin must be at least 1"};

  sigrid::LatticeModel model = sigrid::load_model(args.model);
  sigrid::StepperKind stepper = sigrid::parse_stepper_kind(args.method);
  sigrid::LatticeState initial;
  initial.alphabet = model.alphabet;
  initial.labels.assign(model.potential.size(), 0);

  sigrid::ChainDiagnostics diag =
      sigrid::run_chain(initial, model.potential, stepper, args.steps, args.burn_in,
                        args.thin, args.seed, args.threads);

  std::cout << "steps = " << diag.steps << "\n";
  std::cout << "recorded = " << diag.recorded << "\n";
  std::cout << "acceptance_rate = " << num10(diag.acceptance_rate) << "\n";
  std::cout << "final_energy = "
            << num10(sigrid::lattice_energy(diag.final_state, model.potential)) << "\n";
  if (!diag.empirical.empty() && diag.empirical.size() <= 16) {
    std::cout << "empirical =";
    for (double p : diag.empirical) std::cout << ' ' << num10(p);
    std::cout << "\n";
  }
  if (!args.out.empty()) {
    std::string csv = "step,energy\n";
    for (std::size_t i = 0; i < diag.energy_trace.size(); ++i) {
      std::uint64_t step = args.burn_in + i * args.thin;
      csv += std::to_string(step) + "," + num17(diag.energy_trace[i]) + "\n";
    }
    write_text_file(args.out, csv);
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

struct RetrieveArgs {
  std::string input;
  std::string output;
  std::string method = "threshold";
  std::uint64_t band = 0;
  double min_pct = 2.0;
  double max_pct = 98.0;
  double ref_frozen = 0.0;
  double ref_thaw = 1.0;
  double cutoff = 0.5;
  double mu_frozen = 0.25;
  double mu_thaw = 0.75;
  double noise_sigma = 0.15;
  double smoothness = 0.5;
  std::string schedule = "0.5:150,1:150,2:150,4:150";
  std::uint64_t seed = 0;
  std::string report_path;
  int threads = 0;
};

int cmd_retrieve_ft(const RetrieveArgs& args) {
  ConfigEcho echo("retrieve-ft");
  echo.add("input", args.input);
  echo.add("output", args.output);
  echo.add("method", args.method);
  echo.add("band", args.band);
  echo.add("min-pct", args.min_pct);
  echo.add("max-pct", args.max_pct);
  echo.add("ref-frozen", args.ref_frozen);
  echo.add("ref-thaw", args.ref_thaw);
  echo.add("cutoff", args.cutoff);
  echo.add("mu-frozen", args.mu_frozen);
  echo.add("mu-thaw", args.mu_thaw);
  echo.add("noise-sigma", args.noise_sigma);
  echo.add("smoothness", args.smoothness);
  echo.add("schedule", args.schedule);
  echo.add("seed", args.seed);
  echo.add("report", args.report_path);
  echo.add("threads", args.threads);
  echo.print();

  sigrid::RetrievalParams params;
  params.min_pct = args.min_pct;
  params.max_pct = args.max_pct;
  params.threshold = {args.ref_frozen, args.ref_thaw, args.cutoff};
  params.posterior.noise_sigma = args.noise_sigma;
  params.posterior.smoothness = args.smoothness;
  params.posterior.mu_frozen = args.mu_frozen;
  params.posterior.mu_thaw = args.mu_thaw;
  params.posterior.beta_schedule = parse_schedule(args.schedule);

  sigrid::RasterField field = sigrid::load_raster(args.input);
  sigrid::RetrievalResult result =
      sigrid::retrieve_ft(field, args.band, sigrid::parse_retrieval_method(args.method),
                          params, args.seed, args.threads);
  sigrid::save_raster(result.map, args.output);
  std::string text = result.report.to_text();
  std::cout << text;
  if (!args.report_path.empty()) write_text_file(args.report_path, text);
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

struct BenchArgs {
  std::string kind;
  std::string model;
  std::string methods = "pca,gibbs,metropolis";
  std::uint64_t steps = 0;
  std::uint64_t replicas = 20000;
  std::uint64_t n = 1000000;
  std::string thread_counts = "1,2,8";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& args) {
  ConfigEcho echo("bench");
  echo.add("kind", args.kind);
  echo.add("model", args.model);
  echo.add("methods", args.methods);
  echo.add("steps", args.steps);
  echo.add("replicas", args.replicas);
  echo.add("n", args.n);
  echo.add("thread-counts", args.thread_counts);
  echo.add("seed", args.seed);
  echo.add("out", args.out);
  echo.print();

  sigrid::BenchReport report;
  if (args.kind == "mixing") {
    if (args.model.empty()) throw CliError{10, "bench mixing needs --model"};
    sigrid::LatticeModel model = sigrid::load_model(args.model);
    std::vector<sigrid::StepperKind> methods;
    for (const std::string& name : split(args.methods, ','))
      methods.push_back(sigrid::parse_stepper_kind(name));
    std::uint64_t steps = args.steps ? args.steps : 200;
    report = sigrid::bench_mixing(model, methods, steps, args.replicas, args.seed);
  } else if (args.kind == "throughput") {
    std::vector<int> threads;
    for (const std::string& t : split(args.thread_counts, ',')) {
      try {
        threads.push_back(std::stoi(t));
      } catch (const std::exception&) {
        throw CliError{10, "bad thread count '" + t + "'"};
      }
    }
    std::uint64_t steps = args.steps ? args.steps : 100;
    report = sigrid::bench_throughput(args.n, threads, steps, args.seed);
  } else {
    throw CliError{10, "unknown bench kind '" + args.kind + "' (mixing, throughput)"};
  }

  std::string text = report.to_text();
  std::cout << text;
  if (!args.out.empty()) write_text_file(args.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raster modeling and Bayesian retrieval toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Config file: a [subcommand] section of key = value lines; "
                 "command-line flags override it");

  StatsArgs stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Per-band statistics of a raster");
  stats_cmd->add_option("--input", stats.input, "Input raster (RFLD/RTXT)")->required();
  stats_cmd->add_option("--band", stats.band, "Band index (-1: all)");

  PrepArgs prep;
  CLI::App* prep_cmd =
      app.add_subcommand("prep", "Percentile clip and min-max normalize every band");
  prep_cmd->add_option("--input", prep.input, "Input raster")->required();
  prep_cmd->add_option("--output", prep.output, "Output raster (RFLD)")->required();
  prep_cmd->add_option("--min-pct", prep.min_pct, "Lower percentile");
  prep_cmd->add_option("--max-pct", prep.max_pct, "Upper percentile");

  RescaleArgs rescale;
  CLI::App* rescale_cmd =
      app.add_subcommand("rescale", "Resample a raster through the grid operators");
  rescale_cmd->add_option("--input", rescale.input, "Input raster")->required();
  rescale_cmd->add_option("--output", rescale.output, "Output raster")->required();
  rescale_cmd->add_option("--width", rescale.width, "Output width")->required();
  rescale_cmd->add_option("--height", rescale.height, "Output height")->required();
  rescale_cmd->add_option("--form", rescale.form, "discrete | kantorovich");
  rescale_cmd->add_option("--sigmoid", rescale.sigmoid, "logistic | ramp");
  rescale_cmd->add_option("--steepness", rescale.steepness, "Sigmoid steepness w");
  rescale_cmd->add_option("--band", rescale.band, "Band index (-1: all)");
  rescale_cmd->add_option("--threads", rescale.threads, "Worker threads (0: auto)");

  InvertDemoArgs invert;
  CLI::App* invert_cmd = app.add_subcommand(
      "invert-demo", "Forward-model a synthetic field, invert, and report errors");
  invert_cmd->add_option("--n", invert.n, "Operator resolution");
  invert_cmd->add_option("--d", invert.d, "Dimension (1-3)");
  invert_cmd->add_option("--sigmoid", invert.sigmoid, "logistic | ramp");
  invert_cmd->add_option("--steepness", invert.steepness, "Sigmoid steepness w");
  invert_cmd->add_option("--form", invert.form, "discrete | kantorovich");
  invert_cmd->add_option("--field", invert.field,
                         "const | linear | sin2pi | gauss_bump");
  invert_cmd->add_option("--tol", invert.tol, "Relative residual tolerance");
  invert_cmd->add_option("--max-iter", invert.max_iter, "Iteration cap");
  invert_cmd->add_option("--quad", invert.quad, "Quadrature points per axis");

  SampleArgs sample;
  CLI::App* sample_cmd = app.add_subcommand("sample", "Run an MCMC chain on a model file");
  sample_cmd->add_option("--model", sample.model, "Model file")->required();
  sample_cmd->add_option("--method", sample.method, "pca | gibbs | metropolis");
  sample_cmd->add_option("--steps", sample.steps, "Chain steps")->required();
  sample_cmd->add_option("--burn-in", sample.burn_in, "Discarded prefix");
  sample_cmd->add_option("--thin", sample.thin, "Record every thin-th state");
  sample_cmd->add_option("--seed", sample.seed, "RNG seed");
  sample_cmd->add_option("--out", sample.out, "Energy trace CSV path");
  sample_cmd->add_option("--threads", sample.threads, "Worker threads (0: auto)");

  RetrieveArgs retrieve;
  CLI::App* retrieve_cmd =
      app.add_subcommand("retrieve-ft", "Binary freeze/thaw retrieval from a raster band");
  retrieve_cmd->add_option("--input", retrieve.input, "Input raster")->required();
  retrieve_cmd->add_option("--output", retrieve.output, "Output binary raster")->required();
  retrieve_cmd->add_option("--method", retrieve.method,
                           "threshold | bayes-pca | bayes-gibbs");
  retrieve_cmd->add_option("--band", retrieve.band, "Band index");
  retrieve_cmd->add_option("--min-pct", retrieve.min_pct, "Lower clip percentile");
  retrieve_cmd->add_option("--max-pct", retrieve.max_pct, "Upper clip percentile");
  retrieve_cmd->add_option("--ref-frozen", retrieve.ref_frozen, "Frozen reference");
  retrieve_cmd->add_option("--ref-thaw", retrieve.ref_thaw, "Thaw reference");
  retrieve_cmd->add_option("--cutoff", retrieve.cutoff, "Relative-position cutoff");
  retrieve_cmd->add_option("--mu-frozen", retrieve.mu_frozen, "Frozen class mean");
  retrieve_cmd->add_option("--mu-thaw", retrieve.mu_thaw, "Thaw class mean");
  retrieve_cmd->add_option("--noise-sigma", retrieve.noise_sigma, "Observation noise std");
  retrieve_cmd->add_option("--smoothness", retrieve.smoothness, "Neighbor coupling");
  retrieve_cmd->add_option("--schedule", retrieve.schedule,
                           "Annealing schedule beta:steps[,beta:steps...]");
  retrieve_cmd->add_option("--seed", retrieve.seed, "RNG seed");
  retrieve_cmd->add_option("--report", retrieve.report_path, "Also write the report here");
  retrieve_cmd->add_option("--threads", retrieve.threads, "Worker threads (0: auto)");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Mixing and throughput measurements");
  bench_cmd->add_option("--kind", bench.kind, "mixing | throughput")->required();
  bench_cmd->add_option("--model", bench.model, "Model file (mixing)");
  bench_cmd->add_option("--methods", bench.methods, "Comma-separated methods (mixing)");
  bench_cmd->add_option("--steps", bench.steps, "Steps (0: kind default)");
  bench_cmd->add_option("--replicas", bench.replicas, "Replica chains (mixing)");
  bench_cmd->add_option("--n", bench.n, "Lattice size (throughput)");
  bench_cmd->add_option("--thread-counts", bench.thread_counts,
                        "Comma-separated thread counts (throughput)");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");
  bench_cmd->add_option("--out", bench.out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR 2: " << e.what() << "\n";
    return 2;
  }

  try {
    if (stats_cmd->parsed()) return cmd_stats(stats);
    if (prep_cmd->parsed()) return cmd_prep(prep);
    if (rescale_cmd->parsed()) return cmd_rescale(rescale);
    if (invert_cmd->parsed()) return cmd_invert_demo(invert);
    if (sample_cmd->parsed()) return cmd_sample(sample);
    if (retrieve_cmd->parsed()) return cmd_retrieve_ft(retrieve);
    if (bench_cmd->parsed()) return cmd_bench(bench);
  } catch (const CliError& e) {
    std::cerr << "ERROR " << e.code << ": " << e.message << "\n";
    return e.code;
  } catch (const sigrid::FormatError& e) {
    std::cerr << "ERROR 21: " << e.what() << "\n";
    return 21;
  } catch (const sigrid::IoError& e) {
    std::cerr << "ERROR 20: " << e.what() << "\n";
    return 20;
  } catch (const sigrid::NumericError& e) {
    std::cerr << "ERROR 13: " << e.what() << "\n";
    return 13;
  } catch (const sigrid::DomainError& e) {
    std::cerr << "ERROR 10: " << e.what() << "\n";
    return 10;
  } catch (const std::exception& e) {
    std::cerr << "ERROR 1: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
