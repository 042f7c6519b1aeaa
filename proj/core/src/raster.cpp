#include "sigrid/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sigrid {

namespace {

constexpr std::size_t kMaxSamples = std::size_t(1) << 31;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path.string());
  return std::move(buf).str();
}

double decode_le_double(const char* p) {
  std::uint64_t u;
  std::memcpy(&u, p, 8);
  if constexpr (std::endian::native == std::endian::big) {
    u = __builtin_bswap64(u);
  }
  return std::bit_cast<double>(u);
}

void encode_le_double(double v, char* p) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    u = __builtin_bswap64(u);
  }
  std::memcpy(p, &u, 8);
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Returns the header line [0, eol) and the offset just past its '\n'.
std::pair<std::string, std::size_t> take_line(const std::string& data, std::size_t from) {
  std::size_t eol = data.find('\n', from);
  if (eol == std::string::npos) throw FormatError("malformed header: missing line terminator");
  return {data.substr(from, eol - from), eol + 1};
}

}  // namespace

std::span<const double> RasterField::band(std::size_t b) const {
  if (b >= bands) throw DomainError("band index out of range");
  return {samples.data() + b * band_size(), band_size()};
}

std::span<double> RasterField::band(std::size_t b) {
  if (b >= bands) throw DomainError("band index out of range");
  return {samples.data() + b * band_size(), band_size()};
}

void RasterField::validate() const {
  if (width == 0 || height == 0 || bands == 0)
    throw DomainError("raster dimensions must be positive");
  if (samples.size() != width * height * bands)
    throw DomainError("sample count mismatch: expected " +
                      std::to_string(width * height * bands) + ", have " +
                      std::to_string(samples.size()));
  if (!band_names.empty() && band_names.size() != bands)
    throw DomainError("band_names must be empty or match the band count");
  for (double v : samples)
    if (!std::isfinite(v)) throw DomainError("raster contains a non-finite sample");
}

RasterField load_raster(const std::filesystem::path& path) {
  const std::string data = read_file(path);

  auto [header, offset] = take_line(data, 0);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  long long w = 0, h = 0, b = 0;
  if (!(hs >> magic >> version >> w >> h >> b))
    throw FormatError("malformed header: expected 'RFLD|RTXT 1 <w> <h> <bands>'");
  std::string trailing;
  if (hs >> trailing) throw FormatError("malformed header: trailing tokens");
  if (magic != "RFLD" && magic != "RTXT")
    throw FormatError("malformed header: unknown magic '" + magic + "'");
  if (version != 1) throw FormatError("malformed header: unsupported version");
  if (w <= 0 || h <= 0 || b <= 0) throw FormatError("malformed header: non-positive dimension");

  RasterField field;
  field.width = std::size_t(w);
  field.height = std::size_t(h);
  field.bands = std::size_t(b);
  const std::size_t count = field.width * field.height * field.bands;
  if (count > kMaxSamples) throw FormatError("malformed header: raster too large");
  field.samples.resize(count);

  if (magic == "RFLD") {
    auto [line, next] = take_line(data, offset);
    offset = next;
    if (line.rfind("NAMES ", 0) == 0) {
      field.band_names = split_names(line.substr(6));
      if (field.band_names.size() != field.bands)
        throw FormatError("NAMES count does not match band count");
      auto [data_line, after] = take_line(data, offset);
      line = data_line;
      offset = after;
    }
    if (line != "DATA") throw FormatError("malformed header: expected DATA line");

    const std::size_t payload = data.size() - offset;
    if (payload != count * 8)
      throw FormatError("sample count mismatch: expected " + std::to_string(count) +
                        " samples (" + std::to_string(count * 8) + " bytes), found " +
                        std::to_string(payload) + " bytes");
    for (std::size_t i = 0; i < count; ++i) {
      double v = decode_le_double(data.data() + offset + i * 8);
      if (!std::isfinite(v))
        throw FormatError("non-finite sample at byte offset " +
                          std::to_string(offset + i * 8));
      field.samples[i] = v;
    }
  } else {
    const char* base = data.data();
    const char* p = base + offset;
    const char* end = base + data.size();
    for (std::size_t i = 0; i < count; ++i) {
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (p >= end)
        throw FormatError("sample count mismatch: expected " + std::to_string(count) +
                          " values, found " + std::to_string(i));
      char* after = nullptr;
      double v = std::strtod(p, &after);
      if (after == p)
        throw FormatError("malformed sample at byte offset " +
                          std::to_string(std::size_t(p - base)));
      if (!std::isfinite(v))
        throw FormatError("non-finite sample at byte offset " +
                          std::to_string(std::size_t(p - base)));
      field.samples[i] = v;
      p = after;
    }
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p != end)
      throw FormatError("sample count mismatch: trailing content at byte offset " +
                        std::to_string(std::size_t(p - base)));
  }
  return field;
}

void save_raster(const RasterField& field, const std::filesystem::path& path) {
  field.validate();
  for (const auto& name : field.band_names)
    if (name.find_first_of(",\n\r") != std::string::npos)
      throw DomainError("band name contains a reserved character: " + name);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());

  out << "RFLD 1 " << field.width << ' ' << field.height << ' ' << field.bands << '\n';
  if (!field.band_names.empty()) {
    out << "NAMES ";
    for (std::size_t i = 0; i < field.band_names.size(); ++i) {
      if (i) out << ',';
      out << field.band_names[i];
    }
    out << '\n';
  }
  out << "DATA\n";

  std::vector<char> buf(field.samples.size() * 8);
  for (std::size_t i = 0; i < field.samples.size(); ++i)
    encode_le_double(field.samples[i], buf.data() + i * 8);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw IoError("write failure: " + path.string());
}

BandStats band_stats(const RasterField& field, std::size_t band_index) {
  auto values = field.band(band_index);
  BandStats s;
  s.min = values[0];
  s.max = values[0];
  for (double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  if (s.min == s.max) {
    // Constant band: exact stats, no accumulation error.
    s.mean = s.min;
    s.std = 0.0;
    return s;
  }
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = std::clamp(sum / double(values.size()), s.min, s.max);
  double sq = 0;
  for (double v : values) {
    double d = v - s.mean;
    sq += d * d;
  }
  s.std = std::sqrt(sq / double(values.size()));
  return s;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty range");
  if (!(q >= 0.0 && q <= 100.0)) throw DomainError("percentile rank must be in [0,100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  double pos = q / 100.0 * double(m - 1);
  std::size_t i = std::size_t(pos);
  if (i >= m - 1) return sorted[m - 1];
  double frac = pos - double(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

std::vector<double> clip_percentile(std::span<const double> band, double min_pct,
                                    double max_pct) {
  if (band.empty()) throw DomainError("clip_percentile: empty band");
  if (!(min_pct >= 0.0 && min_pct < max_pct && max_pct <= 100.0))
    throw DomainError("clip_percentile: need 0 <= min_pct < max_pct <= 100");
  std::vector<double> sorted(band.begin(), band.end());
  std::sort(sorted.begin(), sorted.end());
  auto pick = [&](double q) {
    double pos = q / 100.0 * double(sorted.size() - 1);
    std::size_t i = std::size_t(pos);
    if (i >= sorted.size() - 1) return sorted.back();
    return sorted[i] + (pos - double(i)) * (sorted[i + 1] - sorted[i]);
  };
  const double lo = pick(min_pct);
  const double hi = pick(max_pct);
  std::vector<double> out(band.begin(), band.end());
  for (double& v : out) v = std::clamp(v, lo, hi);
  return out;
}

std::vector<double> normalize_minmax(std::span<const double> band) {
  if (band.empty()) throw DomainError("normalize_minmax: empty band");
  auto [mn_it, mx_it] = std::minmax_element(band.begin(), band.end());
  const double mn = *mn_it, mx = *mx_it;
  std::vector<double> out(band.size());
  if (mn == mx) return out;  // constant band -> all zeros
  const double range = mx - mn;
  for (std::size_t i = 0; i < band.size(); ++i) out[i] = (band[i] - mn) / range;
  return out;
}

}  // namespace sigrid
