#include "sigrid/operators.hpp"

#include <algorithm>
#include <cmath>

#include "sigrid/parallel.hpp"

namespace sigrid {

namespace {

// Compensated accumulator; keeps the constant-reproduction error near machine
// epsilon independent of the term count.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    double y = v - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

std::string index_to_string(std::span<const long> k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(k[i]);
  }
  return s + ")";
}

double bilinear_sample(std::span<const double> band, std::size_t w, std::size_t h,
                       double row, double col) {
  row = std::clamp(row, 0.0, double(h - 1));
  col = std::clamp(col, 0.0, double(w - 1));
  std::size_t r0 = std::size_t(row);
  std::size_t c0 = std::size_t(col);
  std::size_t r1 = std::min(r0 + 1, h - 1);
  std::size_t c1 = std::min(c0 + 1, w - 1);
  double fr = row - double(r0);
  double fc = col - double(c0);
  double top = (1.0 - fc) * band[r0 * w + c0] + fc * band[r0 * w + c1];
  double bot = (1.0 - fc) * band[r1 * w + c0] + fc * band[r1 * w + c1];
  return (1.0 - fr) * top + fr * bot;
}

}  // namespace

void BoxDomain::validate() const {
  if (bounds.empty() || bounds.size() > kMaxDim)
    throw DomainError("box dimension must be between 1 and 3");
  for (auto [a, b] : bounds) {
    if (!std::isfinite(a) || !std::isfinite(b))
      throw DomainError("box bounds must be finite");
    if (!(a < b)) throw DomainError("box bounds must satisfy a < b on every axis");
  }
}

std::size_t IndexSet::total() const {
  std::size_t t = 1;
  for (std::size_t i = 0; i < dim; ++i) t *= axis_size(i);
  return t;
}

std::array<long, kMaxDim> IndexSet::unflatten(std::size_t flat) const {
  std::array<long, kMaxDim> k{};
  for (std::size_t i = dim; i-- > 0;) {
    std::size_t s = axis_size(i);
    k[i] = lo[i] + long(flat % s);
    flat /= s;
  }
  return k;
}

std::size_t IndexSet::flatten(std::span<const long> k) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dim; ++i)
    flat = flat * axis_size(i) + std::size_t(k[i] - lo[i]);
  return flat;
}

OperatorForm parse_operator_form(const std::string& name) {
  if (name == "discrete") return OperatorForm::discrete;
  if (name == "kantorovich") return OperatorForm::kantorovich;
  throw DomainError("unknown operator form: " + name);
}

std::string to_string(OperatorForm form) {
  return form == OperatorForm::discrete ? "discrete" : "kantorovich";
}

void OperatorConfig::validate() const {
  domain.validate();
  sigmoid.validate();
  if (n < 1) throw DomainError("operator resolution n must be at least 1");
}

IndexSet build_index_set(const BoxDomain& domain, unsigned n) {
  domain.validate();
  if (n < 1) throw DomainError("index set needs n >= 1");
  IndexSet set;
  set.n = n;
  set.dim = domain.dim();
  for (std::size_t i = 0; i < set.dim; ++i) {
    set.lo[i] = long(std::floor(double(n) * domain.lower(i)));
    set.hi[i] = long(std::ceil(double(n) * domain.upper(i)));
  }
  return set;
}

GridFunction sample_on_grid(const ScalarField& f, const IndexSet& index_set) {
  GridFunction grid;
  grid.index_set = index_set;
  grid.values.resize(index_set.total());
  std::array<double, kMaxDim> x{};
  for (std::size_t flat = 0; flat < grid.values.size(); ++flat) {
    auto k = index_set.unflatten(flat);
    for (std::size_t i = 0; i < index_set.dim; ++i)
      x[i] = double(k[i]) / double(index_set.n);
    double v = f(std::span<const double>(x.data(), index_set.dim));
    if (!std::isfinite(v))
      throw NumericError("non-finite sample at grid index " +
                         index_to_string({k.data(), index_set.dim}));
    grid.values[flat] = v;
  }
  return grid;
}

GridFunction cell_means(const ScalarField& f, const IndexSet& index_set,
                        unsigned quad_points_per_axis) {
  if (quad_points_per_axis < 1)
    throw DomainError("cell_means needs at least one quadrature point per axis");
  const unsigned q = quad_points_per_axis;
  const std::size_t d = index_set.dim;
  const double n = double(index_set.n);

  GridFunction grid;
  grid.index_set = index_set;
  grid.values.resize(index_set.total());

  std::size_t points = 1;
  for (std::size_t i = 0; i < d; ++i) points *= q;

  std::array<double, kMaxDim> x{};
  for (std::size_t flat = 0; flat < grid.values.size(); ++flat) {
    auto k = index_set.unflatten(flat);
    KahanSum acc;
    for (std::size_t p = 0; p < points; ++p) {
      std::size_t rem = p;
      for (std::size_t i = d; i-- > 0;) {
        unsigned j = unsigned(rem % q);
        rem /= q;
        x[i] = (double(k[i]) + (double(j) + 0.5) / double(q)) / n;
      }
      double v = f(std::span<const double>(x.data(), d));
      if (!std::isfinite(v))
        throw NumericError("non-finite evaluation in cell " +
                           index_to_string({k.data(), d}));
      acc.add(v);
    }
    grid.values[flat] = acc.sum / double(points);
  }
  return grid;
}

GridFunction make_grid(const OperatorConfig& config, const ScalarField& f,
                       unsigned quad_points_per_axis) {
  config.validate();
  IndexSet set = build_index_set(config.domain, config.n);
  return config.form == OperatorForm::discrete
             ? sample_on_grid(f, set)
             : cell_means(f, set, quad_points_per_axis);
}

OperatorEvaluator::OperatorEvaluator(OperatorConfig config, GridFunction grid)
    : config_(std::move(config)), grid_(std::move(grid)) {
  config_.validate();
  IndexSet expected = build_index_set(config_.domain, config_.n);
  if (grid_.index_set != expected)
    throw DomainError("grid function does not match the config's index set");
  if (grid_.values.size() != expected.total())
    throw DomainError("grid value count does not match the index set");
  for (double v : grid_.values)
    if (!std::isfinite(v)) throw DomainError("grid function contains a non-finite value");
  halfwidth_ = phi_support_halfwidth(config_.sigmoid);
}

double OperatorEvaluator::operator()(std::span<const double> x) const {
  const IndexSet& set = grid_.index_set;
  const std::size_t d = set.dim;
  if (x.size() != d) throw DomainError("evaluation point dimension mismatch");

  // Points a hair outside the box (evaluation grids often land there through
  // rounding) are snapped to the boundary; anything farther is an error.
  std::array<double, kMaxDim> xc{};
  for (std::size_t i = 0; i < d; ++i) {
    double a = config_.domain.lower(i);
    double b = config_.domain.upper(i);
    double tol = 1e-9 * (b - a);
    double v = x[i];
    if (v < a) {
      if (v < a - tol) throw DomainError("evaluation point outside the domain");
      v = a;
    } else if (v > b) {
      if (v > b + tol) throw DomainError("evaluation point outside the domain");
      v = b;
    }
    xc[i] = v;
  }

  // Per-axis kernel windows; terms outside contribute less than 1e-300.
  std::array<long, kMaxDim> kmin{}, kmax{};
  std::array<std::vector<double>, kMaxDim> weights;
  for (std::size_t i = 0; i < d; ++i) {
    double t = double(set.n) * xc[i];
    long a = std::max(set.lo[i], long(std::ceil(t - halfwidth_)));
    long b = std::min(set.hi[i], long(std::floor(t + halfwidth_)));
    if (a > b) {  // window degenerated; fall back to the full axis
      a = set.lo[i];
      b = set.hi[i];
    }
    kmin[i] = a;
    kmax[i] = b;
    auto& w = weights[i];
    w.resize(std::size_t(b - a + 1));
    for (long k = a; k <= b; ++k) w[std::size_t(k - a)] = phi_eval(config_.sigmoid, t - double(k));
  }
  for (std::size_t i = d; i < kMaxDim; ++i) {
    kmin[i] = 0;
    kmax[i] = 0;
    weights[i] = {1.0};
  }

  const std::size_t s1 = d > 1 ? set.axis_size(1) : 1;
  const std::size_t s2 = d > 2 ? set.axis_size(2) : 1;

  KahanSum num, den;
  for (long k0 = kmin[0]; k0 <= kmax[0]; ++k0) {
    double w0 = weights[0][std::size_t(k0 - kmin[0])];
    if (w0 < 1e-300) continue;
    std::size_t base0 = std::size_t(k0 - set.lo[0]) * s1;
    for (long k1 = kmin[1]; k1 <= kmax[1]; ++k1) {
      double w01 = w0 * weights[1][std::size_t(k1 - kmin[1])];
      if (w01 < 1e-300) continue;
      std::size_t base1 = (base0 + (d > 1 ? std::size_t(k1 - set.lo[1]) : 0)) * s2;
      for (long k2 = kmin[2]; k2 <= kmax[2]; ++k2) {
        double psi = w01 * weights[2][std::size_t(k2 - kmin[2])];
        if (psi < 1e-300) continue;
        std::size_t flat = base1 + (d > 2 ? std::size_t(k2 - set.lo[2]) : 0);
        den.add(psi);
        num.add(grid_.values[flat] * psi);
      }
    }
  }
  if (!(den.sum > 0.0)) throw NumericError("operator denominator vanished");
  return num.sum / den.sum;
}

double operator_eval(const OperatorConfig& config, const GridFunction& grid,
                     std::span<const double> x) {
  return OperatorEvaluator(config, grid)(x);
}

RasterField rescale_raster(const RasterField& field, std::size_t band,
                           std::size_t out_width, std::size_t out_height,
                           OperatorForm form, const SigmoidSpec& sigmoid,
                           int threads) {
  field.validate();
  sigmoid.validate();
  if (band >= field.bands) throw DomainError("band index out of range");
  if (out_width < 1 || out_height < 1)
    throw DomainError("output dimensions must be positive");

  const std::size_t w = field.width, h = field.height;
  auto src = field.band(band);

  RasterField out;
  out.width = out_width;
  out.height = out_height;
  out.bands = 1;
  if (!field.band_names.empty()) out.band_names = {field.band_names[band]};
  out.samples.resize(out_width * out_height);

  if (w == 1 && h == 1) {
    if (form == OperatorForm::kantorovich)
      throw DomainError("1x1 raster has no cell structure for the kantorovich form");
    std::fill(out.samples.begin(), out.samples.end(), src[0]);
    return out;
  }

  const unsigned n = unsigned(std::max(w, h) - 1);
  OperatorConfig config;
  config.domain.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  config.n = n;
  config.sigmoid = sigmoid;
  config.form = form;

  IndexSet set = build_index_set(config.domain, n);  // k in {0..n} per axis

  // Axis 0 is horizontal (column), axis 1 vertical (row). Grid node k sits at
  // fractional pixel (k/n * (size-1)); for square inputs that is exactly the
  // pixel lattice. Discrete form reads point samples (bilinear), Kantorovich
  // takes the nearest pixel as the cell value with edge replication.
  GridFunction grid;
  grid.index_set = set;
  grid.values.resize(set.total());
  for (std::size_t flat = 0; flat < grid.values.size(); ++flat) {
    auto k = set.unflatten(flat);
    double col = w == 1 ? 0.0 : double(k[0]) / double(n) * double(w - 1);
    double row = h == 1 ? 0.0 : double(k[1]) / double(n) * double(h - 1);
    if (form == OperatorForm::discrete) {
      grid.values[flat] = bilinear_sample(src, w, h, row, col);
    } else {
      std::size_t pc = std::size_t(std::lround(col));
      std::size_t pr = std::size_t(std::lround(row));
      grid.values[flat] = src[std::min(pr, h - 1) * w + std::min(pc, w - 1)];
    }
  }

  OperatorEvaluator eval(config, std::move(grid));
  parallel_for(0, out_height, threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      double y = out_height == 1 ? 0.5 : double(r) / double(out_height - 1);
      for (std::size_t c = 0; c < out_width; ++c) {
        double xp = out_width == 1 ? 0.5 : double(c) / double(out_width - 1);
        const double x[2] = {xp, y};
        out.samples[r * out_width + c] = eval(std::span<const double>(x, 2));
      }
    }
  });
  return out;
}

}  // namespace sigrid
