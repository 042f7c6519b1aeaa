#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "sigrid/mcmc.hpp"
#include "sigrid/raster.hpp"
#include "test_support.hpp"

using namespace sigrid;
using test_support::TempDir;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string read_bytes(const std::filesystem::path& path) { return read_file(path); }

const std::string& cli_path() {
  static std::string path = [] {
    const char* env = std::getenv("SIGRID_CLI");
    REQUIRE_MESSAGE(env != nullptr, "SIGRID_CLI must point at the CLI binary");
    return std::string(env);
  }();
  return path;
}

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  auto out_path = tmp.file("stdout.txt");
  auto err_path = tmp.file("stderr.txt");
  std::string cmd = cli_path() + " " + args + " >" + out_path.string() + " 2>" +
                    err_path.string();
  int rc = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

RasterField demo_field() {
  RasterField f;
  f.width = 2;
  f.height = 2;
  f.bands = 1;
  f.samples = {0, 1, 2, 3};
  return f;
}

}  // namespace

TEST_CASE("stats prints the band summary and config echo") {
  TempDir tmp;
  save_raster(demo_field(), tmp.file("demo.rfld"));
  RunResult r = run_cli(tmp, "stats --input " + tmp.file("demo.rfld").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("# config stats") != std::string::npos);
  CHECK(r.out.find("band = -1") != std::string::npos);
  CHECK(r.out.find("min = 0") != std::string::npos);
  CHECK(r.out.find("max = 3") != std::string::npos);
  CHECK(r.out.find("mean = 1.5") != std::string::npos);
  CHECK(r.out.find("std = 1.118033989") != std::string::npos);
}

TEST_CASE("prep with full-range percentiles is the identity on a unit band") {
  TempDir tmp;
  RasterField f;
  f.width = 3;
  f.height = 1;
  f.bands = 1;
  f.samples = {0.0, 0.25, 1.0};
  save_raster(f, tmp.file("in.rfld"));
  RunResult r = run_cli(tmp, "prep --input " + tmp.file("in.rfld").string() +
                                 " --output " + tmp.file("out.rfld").string() +
                                 " --min-pct 0 --max-pct 100");
  CHECK(r.exit_code == 0);
  RasterField out = load_raster(tmp.file("out.rfld"));
  CHECK(out.samples == f.samples);
}

TEST_CASE("prep applies the clip and normalize semantics") {
  TempDir tmp;
  RasterField f;
  f.width = 10;
  f.height = 10;
  f.bands = 1;
  f.samples.resize(100);
  for (int i = 0; i < 100; ++i) f.samples[std::size_t(i)] = i;
  save_raster(f, tmp.file("in.rfld"));
  RunResult r = run_cli(tmp, "prep --input " + tmp.file("in.rfld").string() +
                                 " --output " + tmp.file("out.rfld").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("clip [1.98, 97.02]") != std::string::npos);
  RasterField out = load_raster(tmp.file("out.rfld"));
  double mn = 2, mx = -1;
  for (double v : out.samples) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(mn == 0.0);
  CHECK(mx == 1.0);
}

TEST_CASE("sample validates steps against burn-in with exit code 12") {
  TempDir tmp;
  LatticeModel model;
  model.alphabet = {-1.0, 1.0};
  model.potential = PairPotential::from_triples(
      2, std::vector<CouplingTriple>{{0, 1, 1.0}}, {0.0, 0.0}, 0.5);
  save_model(model, tmp.file("model.txt"));

  RunResult bad = run_cli(tmp, "sample --model " + tmp.file("model.txt").string() +
                                   " --steps 10 --burn-in 10");
  CHECK(bad.exit_code == 12);
  CHECK(bad.err.find("ERROR 12: steps must exceed burn_in") != std::string::npos);

  RunResult ok = run_cli(tmp, "sample --model " + tmp.file("model.txt").string() +
                                  " --steps 200 --burn-in 100 --seed 9 --out " +
                                  tmp.file("trace.csv").string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("recorded = 100") != std::string::npos);
  std::string trace = read_file(tmp.file("trace.csv"));
  CHECK(trace.rfind("step,energy\n", 0) == 0);
  CHECK(trace.find("\n100,") != std::string::npos);
}

TEST_CASE("usage and missing-file errors use the documented codes") {
  TempDir tmp;
  RunResult unknown = run_cli(tmp, "stats --input x --no-such-flag");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("ERROR 2:") != std::string::npos);

  RunResult missing = run_cli(tmp, "stats --input " + tmp.file("absent.rfld").string());
  CHECK(missing.exit_code == 20);
  CHECK(missing.err.find("ERROR 20:") != std::string::npos);

  std::ofstream(tmp.file("garbage.rfld")) << "not a raster\n";
  RunResult malformed = run_cli(tmp, "stats --input " + tmp.file("garbage.rfld").string());
  CHECK(malformed.exit_code == 21);
  CHECK(malformed.err.find("ERROR 21:") != std::string::npos);
}

TEST_CASE("rescale runs and reruns bit-identically") {
  TempDir tmp;
  RasterField f;
  f.width = 6;
  f.height = 5;
  f.bands = 1;
  f.samples.resize(30);
  for (std::size_t i = 0; i < 30; ++i) f.samples[i] = double(i % 7) * 0.12;
  save_raster(f, tmp.file("in.rfld"));

  std::string cmd = "rescale --input " + tmp.file("in.rfld").string() + " --output " +
                    tmp.file("out.rfld").string() +
                    " --width 11 --height 9 --sigmoid ramp --steepness 4";
  RunResult first = run_cli(tmp, cmd);
  CHECK(first.exit_code == 0);
  std::string bytes_first = read_bytes(tmp.file("out.rfld"));
  RunResult second = run_cli(tmp, cmd);
  CHECK(second.exit_code == 0);
  CHECK(read_bytes(tmp.file("out.rfld")) == bytes_first);
  CHECK(first.out == second.out);

  RasterField out = load_raster(tmp.file("out.rfld"));
  CHECK(out.width == 11);
  CHECK(out.height == 9);
}

TEST_CASE("invert-demo prints the roundtrip report") {
  TempDir tmp;
  RunResult r = run_cli(tmp, "invert-demo --n 8 --steepness 16 --field sin2pi --tol 1e-8");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("forward_sup_error = ") != std::string::npos);
  CHECK(r.out.find("recovery_error = ") != std::string::npos);
  CHECK(r.out.find("method = iterative") != std::string::npos);
}

TEST_CASE("retrieve-ft writes a binary raster and a report") {
  TempDir tmp;
  RasterField f;
  f.width = 8;
  f.height = 8;
  f.bands = 1;
  f.samples.resize(64);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      f.samples[r * 8 + c] = c < 4 ? 0.2 + 0.01 * double(r) : 0.8 - 0.01 * double(r);
  save_raster(f, tmp.file("scene.rfld"));

  std::string cmd = "retrieve-ft --input " + tmp.file("scene.rfld").string() +
                    " --output " + tmp.file("ft.rfld").string() +
                    " --method bayes-gibbs --schedule 0.5:30,1:30,2:30 --seed 4 --report " +
                    tmp.file("report.txt").string();
  RunResult r = run_cli(tmp, cmd);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("method: bayes_gibbs") != std::string::npos);
  CHECK(r.out.find("thaw_fraction:") != std::string::npos);
  std::string report = read_file(tmp.file("report.txt"));
  CHECK(report.find("energy_trace:") != std::string::npos);

  RasterField out = load_raster(tmp.file("ft.rfld"));
  for (double v : out.samples) CHECK((v == 0.0 || v == 1.0));

  // bad schedule -> domain error family
  RunResult bad = run_cli(tmp, "retrieve-ft --input " + tmp.file("scene.rfld").string() +
                                   " --output " + tmp.file("x.rfld").string() +
                                   " --schedule 2:10,1:10 --method bayes-pca");
  CHECK(bad.exit_code == 10);
  CHECK(bad.err.find("ERROR 10:") != std::string::npos);
}

TEST_CASE("bench throughput emits a parseable report") {
  TempDir tmp;
  RunResult r = run_cli(tmp,
                        "bench --kind throughput --n 2000 --steps 5 --thread-counts 1,2 "
                        "--seed 3 --out " +
                            tmp.file("bench.txt").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("SIGRID-BENCH 1") != std::string::npos);
  CHECK(r.out.find("states_identical: 1") != std::string::npos);
  std::string text = read_file(tmp.file("bench.txt"));
  CHECK(text == r.out.substr(r.out.find("SIGRID-BENCH 1")));
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir tmp;
  save_raster(demo_field(), tmp.file("demo.rfld"));
  std::ofstream(tmp.file("run.cfg")) << "[stats]\ninput = " << tmp.file("demo.rfld").string()
                                     << "\nband = 0\n";
  RunResult r = run_cli(tmp, "--config " + tmp.file("run.cfg").string() + " stats");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("band = 0") != std::string::npos);
  CHECK(r.out.find("band 0:") != std::string::npos);

  RunResult over = run_cli(tmp, "--config " + tmp.file("run.cfg").string() +
                                    " stats --band -1");
  CHECK(over.exit_code == 0);
  CHECK(over.out.find("band = -1") != std::string::npos);
  CHECK(over.out.find("band 0:") != std::string::npos);
}
