#include "sigrid/inversion.hpp"

#include <algorithm>
#include <cmath>

#include "sigrid/parallel.hpp"

namespace sigrid {

namespace {

constexpr std::size_t kMaxMatrixSize = 2048;
constexpr double kPivotFloor = 1e-14;

double sup_norm(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double GridOperatorMatrix::dominance_margin() const {
  double margin = 1.0;
  for (std::size_t j = 0; j < size; ++j)
    margin = std::min(margin, 2.0 * (*this)(j, j) - 1.0);
  return margin;
}

std::vector<double> GridOperatorMatrix::apply(std::span<const double> v) const {
  if (v.size() != size) throw DomainError("vector length does not match matrix size");
  std::vector<double> out(size);
  for (std::size_t j = 0; j < size; ++j) {
    const double* row = entries.data() + j * size;
    double acc = 0;
    for (std::size_t k = 0; k < size; ++k) acc += row[k] * v[k];
    out[j] = acc;
  }
  return out;
}

GridOperatorMatrix build_grid_matrix(const OperatorConfig& config, int threads) {
  config.validate();
  IndexSet set = build_index_set(config.domain, config.n);
  const std::size_t m = set.total();
  if (m > kMaxMatrixSize)
    throw DomainError("grid operator matrix too large: " + std::to_string(m) +
                      " nodes (limit " + std::to_string(kMaxMatrixSize) + ")");

  const std::size_t d = set.dim;
  const double halfwidth = phi_support_halfwidth(config.sigmoid);

  GridOperatorMatrix A;
  A.size = m;
  A.entries.assign(m * m, 0.0);

  parallel_for(0, m, threads, [&](std::size_t lo, std::size_t hi) {
    std::array<std::vector<double>, kMaxDim> axis_weights;
    for (std::size_t j = lo; j < hi; ++j) {
      auto node = set.unflatten(j);
      // Evaluation node clamped into the box; only ceil-end nodes move.
      std::array<double, kMaxDim> x{};
      for (std::size_t i = 0; i < d; ++i) {
        double xi = double(node[i]) / double(set.n);
        x[i] = std::clamp(xi, config.domain.lower(i), config.domain.upper(i));
      }
      for (std::size_t i = 0; i < d; ++i) {
        double t = double(set.n) * x[i];
        auto& w = axis_weights[i];
        w.assign(set.axis_size(i), 0.0);
        long a = std::max(set.lo[i], long(std::ceil(t - halfwidth)));
        long b = std::min(set.hi[i], long(std::floor(t + halfwidth)));
        for (long k = a; k <= b; ++k)
          w[std::size_t(k - set.lo[i])] = phi_eval(config.sigmoid, t - double(k));
      }
      double* row = A.entries.data() + j * m;
      double row_sum = 0;
      for (std::size_t flat = 0; flat < m; ++flat) {
        auto k = set.unflatten(flat);
        double psi = 1.0;
        for (std::size_t i = 0; i < d; ++i)
          psi *= axis_weights[i][std::size_t(k[i] - set.lo[i])];
        row[flat] = psi;
        row_sum += psi;
      }
      for (std::size_t flat = 0; flat < m; ++flat) row[flat] /= row_sum;
    }
  });
  return A;
}

std::vector<double> invert_direct(const GridOperatorMatrix& matrix,
                                  std::span<const double> observed) {
  const std::size_t m = matrix.size;
  if (observed.size() != m) throw DomainError("observed vector length mismatch");

  std::vector<double> a = matrix.entries;
  std::vector<double> x(observed.begin(), observed.end());

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * m + col]);
    for (std::size_t r = col + 1; r < m; ++r) {
      double v = std::abs(a[r * m + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < kPivotFloor)
      throw NumericError("numerically singular pivot at column " + std::to_string(col));
    if (pivot != col) {
      for (std::size_t c = col; c < m; ++c) std::swap(a[pivot * m + c], a[col * m + c]);
      std::swap(x[pivot], x[col]);
    }
    double inv = 1.0 / a[col * m + col];
    for (std::size_t r = col + 1; r < m; ++r) {
      double factor = a[r * m + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t c = col + 1; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
      x[r] -= factor * x[col];
      a[r * m + col] = 0.0;
    }
  }
  for (std::size_t row = m; row-- > 0;) {
    double acc = x[row];
    for (std::size_t c = row + 1; c < m; ++c) acc -= a[row * m + c] * x[c];
    x[row] = acc / a[row * m + row];
  }
  return x;
}

IterativeResult invert_iterative(const GridOperatorMatrix& matrix,
                                 std::span<const double> observed, double tol,
                                 std::size_t max_iter) {
  const std::size_t m = matrix.size;
  if (observed.size() != m) throw DomainError("observed vector length mismatch");
  if (!(tol > 0)) throw DomainError("tolerance must be positive");

  IterativeResult result;
  result.dominance_margin = matrix.dominance_margin();
  result.dominance_ok = result.dominance_margin > 0.0;

  const double g_norm = sup_norm(observed);
  result.solution.assign(observed.begin(), observed.end());
  if (g_norm == 0.0) {
    result.solution.assign(m, 0.0);
    result.converged = true;
    return result;
  }

  std::vector<double> residual(m);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    std::vector<double> af = matrix.apply(result.solution);
    double r_norm = 0;
    for (std::size_t j = 0; j < m; ++j) {
      residual[j] = observed[j] - af[j];
      r_norm = std::max(r_norm, std::abs(residual[j]));
    }
    double rel = r_norm / g_norm;
    result.residual_history.push_back(rel);
    result.iterations = it;
    if (rel < tol) {
      result.converged = true;
      return result;
    }
    std::size_t hist = result.residual_history.size();
    if (hist > 20 && rel > 10.0 * result.residual_history[hist - 21])
      throw NumericError("Neumann iteration diverged: residual grew 10x over 20 iterations");
    for (std::size_t j = 0; j < m; ++j) result.solution[j] += residual[j];
  }
  return result;
}

RoundtripReport roundtrip_error(const OperatorConfig& config, const ScalarField& f,
                                double tol, std::size_t max_iter,
                                unsigned quad_points_per_axis) {
  GridFunction grid = make_grid(config, f, quad_points_per_axis);
  GridOperatorMatrix A = build_grid_matrix(config);
  std::vector<double> g = A.apply(grid.values);

  const IndexSet& set = grid.index_set;
  double f_norm = std::max(sup_norm(grid.values), 1.0e-300);
  double g_norm = std::max(sup_norm(g), 1.0e-300);

  RoundtripReport report;

  // Forward error compares operator values against f at the clamped nodes.
  std::array<double, kMaxDim> x{};
  for (std::size_t j = 0; j < set.total(); ++j) {
    auto node = set.unflatten(j);
    for (std::size_t i = 0; i < set.dim; ++i) {
      double xi = double(node[i]) / double(set.n);
      x[i] = std::clamp(xi, config.domain.lower(i), config.domain.upper(i));
    }
    double fx = f(std::span<const double>(x.data(), set.dim));
    if (!std::isfinite(fx)) throw NumericError("non-finite field value at an evaluation node");
    report.forward_sup_error =
        std::max(report.forward_sup_error, std::abs(g[j] - fx) / f_norm);
  }

  IterativeResult iter = invert_iterative(A, g, tol, max_iter);
  report.dominance_margin = iter.dominance_margin;
  report.iterations = iter.iterations;
  std::vector<double> recovered;
  if (iter.converged) {
    recovered = std::move(iter.solution);
  } else {
    recovered = invert_direct(A, g);
    report.used_direct = true;
  }

  std::vector<double> ar = A.apply(recovered);
  for (std::size_t j = 0; j < ar.size(); ++j) {
    report.inversion_residual =
        std::max(report.inversion_residual, std::abs(ar[j] - g[j]) / g_norm);
    report.recovery_error =
        std::max(report.recovery_error, std::abs(recovered[j] - grid.values[j]) / f_norm);
  }
  return report;
}

}  // namespace sigrid
