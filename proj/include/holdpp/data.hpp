#pragma once

// Toy datasets, normalization, and persistence: sample CSVs and the binary
// checkpoint format.
//
// Checkpoint layout (all integers little-endian):
//   "HPP1"
//   u32 header length, then that many bytes of key=value lines
//   parameter payload: one IEEE-754 binary64 per parameter
//   u32 CRC-32 of the payload bytes

#include <boost/crc.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "holdpp/dynamics.hpp"
#include "holdpp/score.hpp"

namespace holdpp {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetName { eight_gaussians, two_moons, swiss_roll_2d, gaussian_1d };

inline DatasetName parse_dataset_name(std::string_view s) {
  if (s == "eight_gaussians") return DatasetName::eight_gaussians;
  if (s == "two_moons") return DatasetName::two_moons;
  if (s == "swiss_roll_2d") return DatasetName::swiss_roll_2d;
  if (s == "gaussian_1d") return DatasetName::gaussian_1d;
  throw std::invalid_argument("unknown dataset '" + std::string(s) + "'");
}

inline std::string to_string(DatasetName n) {
  switch (n) {
    case DatasetName::eight_gaussians: return "eight_gaussians";
    case DatasetName::two_moons: return "two_moons";
    case DatasetName::swiss_roll_2d: return "swiss_roll_2d";
    case DatasetName::gaussian_1d: return "gaussian_1d";
  }
  return "unknown";
}

inline std::size_t dataset_dim(DatasetName n) { return n == DatasetName::gaussian_1d ? 1 : 2; }

/// Per-component affine map x_norm = (x - mean) / scale.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) y[d] = (x[d] - mean[d]) / scale[d];
    return y;
  }
  std::vector<double> invert(std::span<const double> y) const {
    std::vector<double> x(y.size());
    for (std::size_t d = 0; d < y.size(); ++d) x[d] = y[d] * scale[d] + mean[d];
    return x;
  }
  static Normalization identity(std::size_t h) {
    return {std::vector<double>(h, 0.0), std::vector<double>(h, 1.0)};
  }
};

struct Dataset {
  DatasetName name;
  std::size_t h = 0;
  std::vector<std::vector<double>> points;  // normalized
  Normalization normalization;
};

/// Mode centers of eight_gaussians in raw (unnormalized) coordinates.
inline std::vector<std::vector<double>> eight_gaussian_centers() {
  std::vector<std::vector<double>> c;
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 8.0;
    c.push_back({4.0 * std::cos(a), 4.0 * std::sin(a)});
  }
  return c;
}

/// Raw draws before normalization.
inline std::vector<std::vector<double>> raw_points(DatasetName name, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  switch (name) {
    case DatasetName::eight_gaussians: {
      const auto centers = eight_gaussian_centers();
      std::uniform_int_distribution<int> comp(0, 7);
      for (std::size_t i = 0; i < count; ++i) {
        const auto& c = centers[static_cast<std::size_t>(comp(rng))];
        const double x = c[0] + 0.1 * normal(rng);
        const double y = c[1] + 0.1 * normal(rng);
        pts.push_back({x, y});
      }
      break;
    }
    case DatasetName::two_moons: {
      std::bernoulli_distribution upper(0.5);
      for (std::size_t i = 0; i < count; ++i) {
        const double th = std::numbers::pi * unit(rng);
        double x, y;
        if (upper(rng)) {
          x = std::cos(th);
          y = std::sin(th);
        } else {
          x = 1.0 - std::cos(th);
          y = 0.5 - std::sin(th);
        }
        x += 0.05 * normal(rng);
        y += 0.05 * normal(rng);
        pts.push_back({x, y});
      }
      break;
    }
    case DatasetName::swiss_roll_2d: {
      for (std::size_t i = 0; i < count; ++i) {
        const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * unit(rng));
        const double x = t * std::cos(t) + 0.05 * normal(rng);
        const double y = t * std::sin(t) + 0.05 * normal(rng);
        pts.push_back({x, y});
      }
      break;
    }
    case DatasetName::gaussian_1d: {
      for (std::size_t i = 0; i < count; ++i) pts.push_back({1.5 + 0.7 * normal(rng)});
      break;
    }
  }
  return pts;
}

/// Population mean and standard deviation per component.
inline Normalization fit_normalization(const std::vector<std::vector<double>>& pts) {
  if (pts.empty()) throw std::invalid_argument("cannot normalize an empty point set");
  const std::size_t h = pts.front().size();
  Normalization nz{std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)};
  const double inv = 1.0 / static_cast<double>(pts.size());
  for (const auto& p : pts)
    for (std::size_t d = 0; d < h; ++d) nz.mean[d] += p[d] * inv;
  for (const auto& p : pts)
    for (std::size_t d = 0; d < h; ++d) nz.scale[d] += (p[d] - nz.mean[d]) * (p[d] - nz.mean[d]) * inv;
  for (auto& s : nz.scale) {
    s = std::sqrt(s);
    if (!(s > 0)) s = 1.0;
  }
  return nz;
}

/// Deterministic in (name, count, seed). Points are normalized to zero mean
/// and unit standard deviation per component.
inline Dataset make_dataset(DatasetName name, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("dataset count must be >= 1");
  auto raw = raw_points(name, count, seed);
  Dataset ds{name, dataset_dim(name), {}, fit_normalization(raw)};
  ds.points.reserve(raw.size());
  for (const auto& p : raw) ds.points.push_back(ds.normalization.apply(p));
  return ds;
}

inline Dataset make_dataset(std::string_view name, std::size_t count, std::uint64_t seed) {
  return make_dataset(parse_dataset_name(name), count, seed);
}

// ---------------------------------------------------------------------------
// Files

/// Writes through a temporary sibling and renames, so a failed write leaves
/// no partial file at path.
template <class Writer>
void write_file_atomic(const std::filesystem::path& path, Writer&& writer, bool binary = false) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    try {
      writer(out);
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

/// Header dim_0,...,dim_{h-1}; one point per line at 17 significant digits.
inline void write_points_csv(const std::filesystem::path& path,
                             const std::vector<std::vector<double>>& pts, std::size_t h) {
  write_file_atomic(path, [&](std::ostream& out) {
    for (std::size_t d = 0; d < h; ++d) out << (d ? "," : "") << "dim_" << d;
    out << '\n';
    out << std::setprecision(17);
    for (const auto& p : pts) {
      if (p.size() != h) throw std::invalid_argument("point dimension does not match CSV header");
      for (std::size_t d = 0; d < h; ++d) out << (d ? "," : "") << p[d];
      out << '\n';
    }
  });
}

inline std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "' is empty");
  const std::size_t h = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (line.rfind("dim_0", 0) != 0) throw FormatError("'" + path.string() + "' lacks a dim_ header");
  std::vector<std::vector<double>> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> p;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        p.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw FormatError("bad number on line " + std::to_string(lineno) + " of '" + path.string() + "'");
      }
    }
    if (p.size() != h)
      throw FormatError("line " + std::to_string(lineno) + " of '" + path.string() + "' has wrong width");
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::array<char, 4> kCheckpointMagic{'H', 'P', 'P', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ScoreNet net;
  DriftSpec spec;
  TrainConfig cfg;
  std::string dataset;           // optional metadata
  Normalization normalization;   // maps generated positions back to data space
};

namespace detail {

inline std::string fmt_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += f(v[i]);
  }
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint key '" + key + "' has a bad number '" + s + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint key '" + key + "' has a bad integer '" + s + "'");
  }
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t crc32(const char* data, std::size_t len) {
  boost::crc_32_type crc;
  crc.process_bytes(data, len);
  return crc.checksum();
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  using detail::fmt_double;
  const auto& spec = ck.spec;
  const std::size_t h = ck.net.output_dim();
  std::ostringstream hdr;
  hdr << "version=" << kCheckpointVersion << '\n'
      << "n=" << spec.n << '\n'
      << "h=" << h << '\n'
      << "gammas=" << detail::join(spec.gammas, fmt_double) << '\n'
      << "xi=" << fmt_double(spec.xi) << '\n'
      << "l_inv=" << fmt_double(spec.l_inv) << '\n'
      << "lambda_star=" << (spec.lambda_star ? fmt_double(*spec.lambda_star) : std::string("none")) << '\n'
      << "layer_dims=" << detail::join(ck.net.layer_dims(), [](std::size_t d) { return std::to_string(d); }) << '\n'
      << "T=" << fmt_double(ck.cfg.T) << '\n'
      << "alpha=" << fmt_double(ck.cfg.alpha) << '\n'
      << "t_eps=" << fmt_double(ck.cfg.t_eps) << '\n'
      << "seed=" << ck.cfg.seed << '\n';
  if (!ck.dataset.empty()) hdr << "dataset=" << ck.dataset << '\n';
  if (!ck.normalization.mean.empty()) {
    hdr << "norm_mean=" << detail::join(ck.normalization.mean, fmt_double) << '\n'
        << "norm_scale=" << detail::join(ck.normalization.scale, fmt_double) << '\n';
  }
  const std::string header = hdr.str();

  std::string payload;
  payload.reserve(ck.net.params().size() * 8);
  for (double v : ck.net.params()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) payload.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }

  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  out += payload;
  detail::put_u32(out, detail::crc32(payload.data(), payload.size()));
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin()))
    throw FormatError("not a checkpoint (bad magic)");
  const std::size_t hlen = detail::get_u32(u + 4);
  if (bytes.size() < 8 + hlen) throw FormatError("checkpoint truncated inside header");
  const std::string header = bytes.substr(8, hlen);

  std::map<std::string, std::string> kv;
  for (const auto& line : detail::split(header, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint header lacks '" + key + "'");
    return it->second;
  };
  if (detail::parse_u64(get("version"), "version") != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + get("version"));

  Checkpoint ck;
  ck.spec.n = detail::parse_u64(get("n"), "n");
  const std::size_t h = detail::parse_u64(get("h"), "h");
  for (const auto& g : detail::split(get("gammas"), ','))
    ck.spec.gammas.push_back(detail::parse_double(g, "gammas"));
  ck.spec.xi = detail::parse_double(get("xi"), "xi");
  ck.spec.l_inv = detail::parse_double(get("l_inv"), "l_inv");
  if (get("lambda_star") != "none")
    ck.spec.lambda_star = detail::parse_double(get("lambda_star"), "lambda_star");
  try {
    ck.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint drift spec is invalid: ") + e.what());
  }
  std::vector<std::size_t> dims;
  for (const auto& d : detail::split(get("layer_dims"), ','))
    dims.push_back(detail::parse_u64(d, "layer_dims"));
  ck.cfg.T = detail::parse_double(get("T"), "T");
  ck.cfg.alpha = detail::parse_double(get("alpha"), "alpha");
  ck.cfg.t_eps = detail::parse_double(get("t_eps"), "t_eps");
  ck.cfg.seed = detail::parse_u64(get("seed"), "seed");
  ck.cfg.l_inv = ck.spec.l_inv;
  if (kv.count("dataset")) ck.dataset = kv["dataset"];
  if (kv.count("norm_mean")) {
    for (const auto& v : detail::split(kv["norm_mean"], ','))
      ck.normalization.mean.push_back(detail::parse_double(v, "norm_mean"));
    for (const auto& v : detail::split(get("norm_scale"), ','))
      ck.normalization.scale.push_back(detail::parse_double(v, "norm_scale"));
    if (ck.normalization.mean.size() != h || ck.normalization.scale.size() != h)
      throw FormatError("checkpoint normalization width does not match h");
  }

  try {
    ck.net = ScoreNet(dims, ck.cfg.T);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint layer_dims invalid: ") + e.what());
  }
  if (ck.net.output_dim() != h || ck.net.state_dim() != ck.spec.n * h)
    throw FormatError("checkpoint layer_dims do not match n and h");

  const std::size_t count = ck.net.params().size();
  const std::size_t payload_at = 8 + hlen;
  if (bytes.size() != payload_at + count * 8 + 4) throw FormatError("checkpoint payload truncated or oversized");
  const std::uint32_t stored = detail::get_u32(u + payload_at + count * 8);
  if (stored != detail::crc32(bytes.data() + payload_at, count * 8))
    throw FormatError("checkpoint checksum mismatch");
  auto params = ck.net.params();
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(u[payload_at + i * 8 + b]) << (8 * b);
    params[i] = std::bit_cast<double>(bits);
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ck);
  write_file_atomic(path, [&](std::ostream& out) { out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }, true);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

/// Rejects a checkpoint whose drift order differs from the one requested.
inline void require_order(const Checkpoint& ck, std::size_t n) {
  if (ck.spec.n != n)
    throw std::invalid_argument("checkpoint has order n=" + std::to_string(ck.spec.n) +
                                " but n=" + std::to_string(n) + " was requested");
}

}  // namespace holdpp
