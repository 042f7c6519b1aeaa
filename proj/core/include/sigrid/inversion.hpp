#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigrid/operators.hpp"

namespace sigrid {

// Row-stochastic matrix A[j][k] = Psi(n*x_j - k) / sum_l Psi(n*x_j - l) with
// evaluation nodes x_j = clamp(j/n into the box), j running over the index
// set. Applying A to grid samples gives the operator's values at the nodes.
struct GridOperatorMatrix {
  std::size_t size = 0;
  std::vector<double> entries;  // row-major, size*size

  double operator()(std::size_t row, std::size_t col) const {
    return entries[row * size + col];
  }

  // min_j (2*A[j][j] - 1): positive iff A is strictly diagonally dominant,
  // a sufficient condition for the Neumann iteration to contract.
  double dominance_margin() const;

  std::vector<double> apply(std::span<const double> v) const;
};

// Dense build; guarded to index sets of at most 2048 entries.
GridOperatorMatrix build_grid_matrix(const OperatorConfig& config, int threads = 0);

// Gaussian elimination with partial pivoting. Throws NumericError when a
// pivot falls below 1e-14.
std::vector<double> invert_direct(const GridOperatorMatrix& matrix,
                                  std::span<const double> observed);

struct IterativeResult {
  std::vector<double> solution;
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // relative sup-norm residuals
  double dominance_margin = 0;
  bool dominance_ok = false;
  bool converged = false;
};

// Richardson/Neumann iteration f <- f + (g - A f), started from f = g.
// Runs best-effort when the dominance check fails (reported in the result);
// throws NumericError when the residual grows 10x over a 20-iteration window.
IterativeResult invert_iterative(const GridOperatorMatrix& matrix,
                                 std::span<const double> observed,
                                 double tol = 1e-10, std::size_t max_iter = 200000);

struct RoundtripReport {
  double forward_sup_error = 0;   // sup_j |(A f)_j - f(x_j)| / max|f|
  double inversion_residual = 0;  // sup-norm residual of the recovered values
  double recovery_error = 0;      // sup_j |recovered_j - f_j| / max|f|
  std::size_t iterations = 0;
  double dominance_margin = 0;
  bool used_direct = false;  // direct fallback when the iteration stalls
};

// Samples f on the grid, applies the operator matrix, inverts, and compares.
RoundtripReport roundtrip_error(const OperatorConfig& config, const ScalarField& f,
                                double tol = 1e-10, std::size_t max_iter = 200000,
                                unsigned quad_points_per_axis = 4);

}  // namespace sigrid
