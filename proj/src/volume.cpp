#include "pifcm/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace pifcm {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw volume I/O assumes a little-endian host");

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_pgm(const std::filesystem::path& path, std::size_t nx,
               std::size_t ny, const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << nx << ' ' << ny << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Dims parse_dims(const std::string& text) {
  Dims d;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  long long a = 0, b = 0, c = 0;
  if (!(in >> a >> x1 >> b >> x2 >> c) || x1 != 'x' || x2 != 'x' || a <= 0 ||
      b <= 0 || c <= 0 || in.peek() != std::char_traits<char>::eof()) {
    throw std::invalid_argument("dims must look like NXxNYxNZ, got '" + text + "'");
  }
  d.nx = static_cast<std::size_t>(a);
  d.ny = static_cast<std::size_t>(b);
  d.nz = static_cast<std::size_t>(c);
  return d;
}

std::string to_string(const Dims& dims) {
  return std::to_string(dims.nx) + "x" + std::to_string(dims.ny) + "x" +
         std::to_string(dims.nz);
}

Volume::Volume(Dims d, std::vector<double> values, bool is_normalized)
    : dims(d), data(std::move(values)), normalized(is_normalized) {
  if (data.size() != dims.voxels()) {
    throw std::invalid_argument("volume data length " + std::to_string(data.size()) +
                                " does not match dims " + to_string(dims));
  }
}

std::span<const double> Volume::slice(std::size_t z) const {
  if (z >= dims.nz) throw std::out_of_range("slice index out of range");
  return std::span<const double>(data).subspan(z * dims.slice_voxels(),
                                               dims.slice_voxels());
}

std::span<const int> LabelVolume::slice(std::size_t z) const {
  if (z >= dims.nz) throw std::out_of_range("slice index out of range");
  return std::span<const int>(labels).subspan(z * dims.slice_voxels(),
                                              dims.slice_voxels());
}

LabelVolume LabelVolume::slice_volume(std::size_t z) const {
  auto s = slice(z);
  return {{dims.nx, dims.ny, 1}, std::vector<int>(s.begin(), s.end()), clusters};
}

SampleKind parse_sample_kind(const std::string& text) {
  if (text == "u8") return SampleKind::u8;
  if (text == "u16" || text == "u16le") return SampleKind::u16le;
  if (text == "f32" || text == "f32le") return SampleKind::f32le;
  throw std::invalid_argument("unknown sample kind '" + text + "' (u8|u16le|f32le)");
}

std::size_t sample_width(SampleKind kind) {
  switch (kind) {
    case SampleKind::u8: return 1;
    case SampleKind::u16le: return 2;
    case SampleKind::f32le: return 4;
  }
  return 0;
}

Volume load_raw(const std::filesystem::path& path, Dims dims, SampleKind kind) {
  const auto bytes = read_file(path);
  const std::size_t expected = dims.voxels() * sample_width(kind);
  if (bytes.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) +
                  " bytes for " + to_string(dims) + ", found " +
                  std::to_string(bytes.size()));
  }
  std::vector<double> values(dims.voxels());
  const char* p = bytes.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    switch (kind) {
      case SampleKind::u8:
        values[i] = static_cast<unsigned char>(p[i]);
        break;
      case SampleKind::u16le: {
        std::uint16_t s;
        std::memcpy(&s, p + 2 * i, 2);
        values[i] = s;
        break;
      }
      case SampleKind::f32le: {
        float f;
        std::memcpy(&f, p + 4 * i, 4);
        values[i] = f;
        break;
      }
    }
  }
  return Volume(dims, std::move(values), false);
}

void write_raw(const Volume& volume, const std::filesystem::path& path,
               SampleKind kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double v : volume.data) {
    switch (kind) {
      case SampleKind::u8: {
        const auto b = to_byte(v);
        out.put(static_cast<char>(b));
        break;
      }
      case SampleKind::u16le: {
        const auto s = static_cast<std::uint16_t>(
            std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
        out.write(reinterpret_cast<const char*>(&s), 2);
        break;
      }
      case SampleKind::f32le: {
        const auto f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
        break;
      }
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

void write_raw_labels(const LabelVolume& labels,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (int l : labels.labels) out.put(static_cast<char>(static_cast<std::uint8_t>(l)));
  if (!out) throw IoError("short write to " + path.string());
}

Volume normalize_minmax(const Volume& volume) {
  Volume out = volume;
  out.normalized = true;
  if (out.data.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(out.data.begin(), out.data.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : out.data) v = range > 0.0 ? (v - lo) / range : 0.0;
  return out;
}

Volume add_gaussian_noise(const Volume& volume, double sigma_pct,
                          std::uint64_t seed) {
  if (!(sigma_pct >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (!volume.normalized) {
    throw std::invalid_argument("noise injection requires a normalized volume");
  }
  Volume out = volume;
  if (sigma_pct == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_pct / 100.0);
  for (double& v : out.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

std::pair<Volume, LabelVolume> generate_phantom(const PhantomSpec& spec) {
  const std::size_t regions = spec.levels.size();
  if (regions == 0) throw std::invalid_argument("phantom needs at least one level");
  if (spec.size < 8) throw std::invalid_argument("phantom size must be >= 8");
  const std::size_t depth = spec.depth == 0 ? std::max<std::size_t>(3, spec.size / 8)
                                            : spec.depth;
  if (depth < 3) throw std::invalid_argument("phantom depth must be >= 3");
  // Each nesting step needs at least one voxel of margin in x/y.
  const std::size_t step = spec.size / (2 * regions);
  if (step < 1) {
    throw std::invalid_argument("phantom size " + std::to_string(spec.size) +
                                " too small to nest " + std::to_string(regions) +
                                " regions");
  }
  for (double level : spec.levels) {
    if (!(level >= 0.0 && level <= 1.0)) {
      throw std::invalid_argument("phantom levels must lie in [0,1]");
    }
  }

  const Dims dims{spec.size, spec.size, depth};
  std::vector<double> values(dims.voxels());
  LabelVolume truth{dims, std::vector<int>(dims.voxels(), 0),
                    static_cast<int>(regions)};
  for (std::size_t z = 0; z < depth; ++z) {
    for (std::size_t y = 0; y < spec.size; ++y) {
      for (std::size_t x = 0; x < spec.size; ++x) {
        // Region k occupies [k*step, size-k*step) in x/y and
        // [k*depth/(4R), depth-k*depth/(4R)) in z.
        int label = 0;
        for (std::size_t k = 1; k < regions; ++k) {
          const std::size_t mxy = k * spec.size / (2 * regions);
          const std::size_t mz = k * depth / (4 * regions);
          const bool inside = x >= mxy && x < spec.size - mxy && y >= mxy &&
                              y < spec.size - mxy && z >= mz && z < depth - mz;
          if (!inside) break;
          label = static_cast<int>(k);
        }
        const std::size_t i = dims.index(x, y, z);
        truth.labels[i] = label;
        values[i] = spec.levels[static_cast<std::size_t>(label)];
      }
    }
  }
  return {Volume(dims, std::move(values), true), std::move(truth)};
}

void export_slice_pgm(const Volume& volume, std::size_t z,
                      const std::filesystem::path& path) {
  if (z >= volume.dims.nz) {
    throw std::invalid_argument("slice " + std::to_string(z) + " out of range (nz=" +
                                std::to_string(volume.dims.nz) + ")");
  }
  const auto s = volume.slice(z);
  std::vector<std::uint8_t> pixels(s.size());
  std::transform(s.begin(), s.end(), pixels.begin(), to_byte);
  write_pgm(path, volume.dims.nx, volume.dims.ny, pixels);
}

void export_slice_pgm(const LabelVolume& labels, std::size_t z,
                      const std::filesystem::path& path) {
  if (z >= labels.dims.nz) {
    throw std::invalid_argument("slice " + std::to_string(z) + " out of range (nz=" +
                                std::to_string(labels.dims.nz) + ")");
  }
  const auto s = labels.slice(z);
  const int span = std::max(1, labels.clusters - 1);
  std::vector<std::uint8_t> pixels(s.size());
  std::transform(s.begin(), s.end(), pixels.begin(), [span](int l) {
    return static_cast<std::uint8_t>(std::clamp(255 * l / span, 0, 255));
  });
  write_pgm(path, labels.dims.nx, labels.dims.ny, pixels);
}

}  // namespace pifcm
