#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sigrid/errors.hpp"

namespace sigrid {

// Multi-band 2-D grid of doubles. Samples are band-sequential and row-major
// within each band; all samples are finite.
struct RasterField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 1;
  std::vector<double> samples;
  std::vector<std::string> band_names;  // empty, or exactly one per band

  std::size_t band_size() const { return width * height; }

  std::span<const double> band(std::size_t b) const;
  std::span<double> band(std::size_t b);

  double at(std::size_t b, std::size_t row, std::size_t col) const {
    return samples[b * band_size() + row * width + col];
  }
  double& at(std::size_t b, std::size_t row, std::size_t col) {
    return samples[b * band_size() + row * width + col];
  }

  // Throws DomainError when dimensions, sample count, or finiteness are off.
  void validate() const;
};

struct BandStats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double std = 0;  // population standard deviation (divisor = count)
};

// Native container, format "RFLD v1":
//   RFLD 1 <width> <height> <bands>\n
//   NAMES <comma-separated>\n        (optional)
//   DATA\n
//   width*height*bands little-endian IEEE-754 doubles, band-sequential,
//   row-major within band.
// An ASCII variant is accepted on load: "RTXT 1 <w> <h> <bands>" followed by
// whitespace-separated decimal values. save_raster always writes RFLD.
RasterField load_raster(const std::filesystem::path& path);
void save_raster(const RasterField& field, const std::filesystem::path& path);

BandStats band_stats(const RasterField& field, std::size_t band_index);

// q-th percentile by linear interpolation between closest ranks:
// pos = q/100*(m-1), i = floor(pos), P = x_i + (pos-i)*(x_{i+1}-x_i) on the
// sorted values.
double percentile(std::span<const double> values, double q);

// Clamps every value into [P_min_pct, P_max_pct].
std::vector<double> clip_percentile(std::span<const double> band,
                                    double min_pct = 2.0, double max_pct = 98.0);

// (x - min) / (max - min); a constant band maps to all zeros.
std::vector<double> normalize_minmax(std::span<const double> band);

}  // namespace sigrid
