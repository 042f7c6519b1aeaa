#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sigrid/errors.hpp"
#include "sigrid/raster.hpp"
#include "sigrid/sigmoid.hpp"

namespace sigrid {

inline constexpr std::size_t kMaxDim = 3;

// Axis-aligned box [a_1,b_1] x ... x [a_d,b_d], 1 <= d <= 3.
struct BoxDomain {
  std::vector<std::pair<double, double>> bounds;

  std::size_t dim() const { return bounds.size(); }
  double lower(std::size_t axis) const { return bounds[axis].first; }
  double upper(std::size_t axis) const { return bounds[axis].second; }

  void validate() const;
};

// Integer index box: floor(n*a_i) <= k_i <= ceil(n*b_i) per axis. Flattening
// is row-major with axis 0 slowest.
struct IndexSet {
  unsigned n = 1;
  std::size_t dim = 1;
  std::array<long, kMaxDim> lo{};
  std::array<long, kMaxDim> hi{};

  std::size_t axis_size(std::size_t axis) const {
    return std::size_t(hi[axis] - lo[axis] + 1);
  }
  std::size_t total() const;
  std::array<long, kMaxDim> unflatten(std::size_t flat) const;
  std::size_t flatten(std::span<const long> k) const;

  bool operator==(const IndexSet&) const = default;
};

// Values attached to an index set: point samples f(k/n) for the discrete
// operator, or cell means over the rectangles [k/n, (k+1)/n]^d for the
// Kantorovich operator.
struct GridFunction {
  IndexSet index_set;
  std::vector<double> values;
};

enum class OperatorForm { discrete, kantorovich };

OperatorForm parse_operator_form(const std::string& name);
std::string to_string(OperatorForm form);

struct OperatorConfig {
  BoxDomain domain;
  unsigned n = 1;
  SigmoidSpec sigmoid;
  OperatorForm form = OperatorForm::discrete;

  void validate() const;
};

using ScalarField = std::function<double(std::span<const double>)>;

IndexSet build_index_set(const BoxDomain& domain, unsigned n);

// values[k] = f(k/n). Ceil-end nodes may lie just outside the box, so f must
// be defined on a neighborhood of it.
GridFunction sample_on_grid(const ScalarField& f, const IndexSet& index_set);

// values[k] = mean of f over [k/n,(k+1)/n]^d, midpoint tensor quadrature with
// q points per axis (exact for affine f).
GridFunction cell_means(const ScalarField& f, const IndexSet& index_set,
                        unsigned quad_points_per_axis = 4);

// Dispatches on config.form.
GridFunction make_grid(const OperatorConfig& config, const ScalarField& f,
                       unsigned quad_points_per_axis = 4);

// Normalized kernel combination sum_k v_k Psi(nx-k) / sum_k Psi(nx-k).
// Validates once, then evaluates at many points; evaluations at distinct
// points may run concurrently.
class OperatorEvaluator {
 public:
  OperatorEvaluator(OperatorConfig config, GridFunction grid);

  double operator()(std::span<const double> x) const;

  const OperatorConfig& config() const { return config_; }
  const GridFunction& grid() const { return grid_; }

 private:
  OperatorConfig config_;
  GridFunction grid_;
  double halfwidth_;
};

double operator_eval(const OperatorConfig& config, const GridFunction& grid,
                     std::span<const double> x);

// Models the selected band on [0,1]^2 with n = max(w,h)-1 and resamples it at
// the output pixel grid. Output values stay within [min, max] of the input
// band; the result is bit-identical for any thread count.
RasterField rescale_raster(const RasterField& field, std::size_t band,
                           std::size_t out_width, std::size_t out_height,
                           OperatorForm form, const SigmoidSpec& sigmoid,
                           int threads = 0);

}  // namespace sigrid
