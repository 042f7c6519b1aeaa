#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "sigrid/operators.hpp"

namespace {

using namespace sigrid;

BoxDomain unit_box(std::size_t d) {
  BoxDomain box;
  for (std::size_t i = 0; i < d; ++i) box.bounds.emplace_back(0.0, 1.0);
  return box;
}

const ScalarField kWave = [](std::span<const double> x) {
  double acc = 1.0;
  for (double xi : x) acc *= std::sin(2.0 * std::numbers::pi * xi);
  return acc;
};

void OperatorEval1D(benchmark::State& state) {
  unsigned n = unsigned(state.range(0));
  OperatorConfig config{unit_box(1), n, {SigmoidKind::logistic, 8.0},
                        OperatorForm::discrete};
  OperatorEvaluator eval(config, make_grid(config, kWave));
  double x = 0.0;
  for (auto _ : state) {
    x += 0.001;
    if (x > 1.0) x -= 1.0;
    double point[1] = {x};
    benchmark::DoNotOptimize(eval(point));
  }
}
BENCHMARK(OperatorEval1D)->Arg(8)->Arg(64)->Arg(256);

void OperatorEval2DRamp(benchmark::State& state) {
  unsigned n = unsigned(state.range(0));
  OperatorConfig config{unit_box(2), n, {SigmoidKind::smoothed_ramp, 8.0},
                        OperatorForm::discrete};
  OperatorEvaluator eval(config, make_grid(config, kWave));
  double x = 0.0;
  for (auto _ : state) {
    x += 0.0017;
    if (x > 1.0) x -= 1.0;
    double point[2] = {x, 1.0 - x};
    benchmark::DoNotOptimize(eval(point));
  }
}
BENCHMARK(OperatorEval2DRamp)->Arg(16)->Arg(64);

void RescaleRaster(benchmark::State& state) {
  std::size_t side = std::size_t(state.range(0));
  RasterField field;
  field.width = side;
  field.height = side;
  field.bands = 1;
  field.samples.resize(side * side);
  for (std::size_t i = 0; i < field.samples.size(); ++i)
    field.samples[i] = double(i % 17) / 16.0;
  for (auto _ : state) {
    RasterField out = rescale_raster(field, 0, 2 * side, 2 * side,
                                     OperatorForm::discrete,
                                     {SigmoidKind::smoothed_ramp, 8.0});
    benchmark::DoNotOptimize(out.samples.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(4 * side * side));
}
BENCHMARK(RescaleRaster)->Arg(32)->Arg(64);

}  // namespace
