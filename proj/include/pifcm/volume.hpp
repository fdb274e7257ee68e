#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pifcm {

/// Voxel counts along each axis. Storage order is x fastest, z slowest.
struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;

  std::size_t voxels() const { return nx * ny * nz; }
  std::size_t slice_voxels() const { return nx * ny; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + nx * (y + ny * z);
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Parses "NXxNYxNZ" (e.g. "181x217x181").
Dims parse_dims(const std::string& text);
std::string to_string(const Dims& dims);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Volume {
  Dims dims;
  std::vector<double> data;
  bool normalized = false;

  Volume() = default;
  Volume(Dims d, std::vector<double> values, bool is_normalized = false);

  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return data[dims.index(x, y, z)];
  }
  std::span<const double> slice(std::size_t z) const;
};

/// Hard labels, each in [0, clusters).
struct LabelVolume {
  Dims dims;
  std::vector<int> labels;
  int clusters = 0;

  std::span<const int> slice(std::size_t z) const;
  LabelVolume slice_volume(std::size_t z) const;
};

enum class SampleKind { u8, u16le, f32le };

SampleKind parse_sample_kind(const std::string& text);
std::size_t sample_width(SampleKind kind);

/// Headerless little-endian raw file. Values are read verbatim, not scaled.
Volume load_raw(const std::filesystem::path& path, Dims dims, SampleKind kind);

/// Writes a normalized volume; u8/u16 outputs scale [0,1] to the full
/// integer range, f32 writes the values as-is.
void write_raw(const Volume& volume, const std::filesystem::path& path,
               SampleKind kind);
void write_raw_labels(const LabelVolume& labels,
                      const std::filesystem::path& path);

Volume normalize_minmax(const Volume& volume);

/// Adds N(0, (sigma_pct/100)^2) to every voxel and clamps to [0,1].
Volume add_gaussian_noise(const Volume& volume, double sigma_pct,
                          std::uint64_t seed);

struct PhantomSpec {
  std::size_t size = 32;
  std::size_t depth = 0;  // 0 selects max(3, size / 8)
  std::vector<double> levels{0.1, 0.35, 0.65, 0.9};
};

/// Nested axis-aligned cuboids centred in the volume; region k (0 = outer)
/// is filled with levels[k] and labelled k.
std::pair<Volume, LabelVolume> generate_phantom(const PhantomSpec& spec);

void export_slice_pgm(const Volume& volume, std::size_t z,
                      const std::filesystem::path& path);
void export_slice_pgm(const LabelVolume& labels, std::size_t z,
                      const std::filesystem::path& path);

}  // namespace pifcm
