#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pifcm/volume.hpp"

namespace pifcm {

enum class NeighborhoodMode { planar, volumetric };

NeighborhoodMode parse_mode(const std::string& text);  // "2d" | "3d"
const char* to_string(NeighborhoodMode mode);

struct NeighborhoodSpec {
  int depth = 2;        // v: furthest shell index
  double decay = 1.0;   // h
  NeighborhoodMode mode = NeighborhoodMode::volumetric;

  void validate() const;
  friend bool operator==(const NeighborhoodSpec&, const NeighborhoodSpec&) = default;
};

/// Exponentially decaying shell weights W_1..W_v, normalised to sum to 1.
std::vector<double> shell_weights(int depth, double decay);

/// Neighbours of every voxel of one slice, grouped in Chebyshev shells.
/// Offsets are relative to the target voxel; indices address the full volume.
struct ShellTable {
  std::size_t voxels = 0;  // nx * ny of the slice
  int depth = 0;
  std::vector<std::size_t> begin;  // voxels * depth + 1 offsets
  std::vector<std::int64_t> offset_x, offset_y, offset_z;
  std::vector<std::size_t> volume_index;

  std::size_t shell_begin(std::size_t voxel, int shell) const {
    return begin[voxel * static_cast<std::size_t>(depth) + static_cast<std::size_t>(shell - 1)];
  }
  std::size_t shell_end(std::size_t voxel, int shell) const {
    return begin[voxel * static_cast<std::size_t>(depth) + static_cast<std::size_t>(shell)];
  }
  std::size_t shell_size(std::size_t voxel, int shell) const {
    return shell_end(voxel, shell) - shell_begin(voxel, shell);
  }
};

/// Shell r of voxel i holds every in-bounds voxel at Chebyshev distance
/// exactly r (within the slice for planar mode).
ShellTable build_shells(const Dims& dims, std::size_t z, const NeighborhoodSpec& spec);

/// Immutable per-slice neighbourhood data shared by every IFCM step.
///
/// Neighbour entries are stored flat, grouped by (voxel, shell); entry
/// ranges come from `begin`. Neighbour indices point into the slab of
/// slices [slab_z0, slab_z0 + slab_nz) whose intensities are kept in
/// `slab_intensities`, so a step never needs the full volume. The target
/// slice itself starts at `target_offset` inside the slab.
struct AttractionCache {
  std::size_t nx = 0, ny = 0;
  std::size_t z = 0;
  NeighborhoodSpec spec;
  std::vector<double> weights;  // W_r, r = 1..v

  std::size_t slab_z0 = 0;
  std::size_t slab_nz = 0;
  std::size_t target_offset = 0;
  std::vector<double> slab_intensities;

  std::vector<std::size_t> begin;     // voxels * v + 1
  std::vector<std::uint32_t> neighbor;  // slab-relative index
  std::vector<double> g;              // |x_i - x_k|
  std::vector<double> q;              // squared Euclidean offset length
  std::vector<double> g_sum;          // per (voxel, shell): sum g
  std::vector<double> q2_sum;         // per (voxel, shell): sum q^2

  std::size_t voxels() const { return nx * ny; }
  int depth() const { return static_cast<int>(weights.size()); }
  std::size_t slot(std::size_t voxel, int shell) const {
    return voxel * weights.size() + static_cast<std::size_t>(shell - 1);
  }
  /// Index of a slab entry in the full volume.
  std::size_t volume_index(std::uint32_t slab_index) const {
    return slab_z0 * nx * ny + slab_index;
  }
  std::size_t shell_size(std::size_t voxel, int shell) const {
    const auto s = slot(voxel, shell);
    return begin[s + 1] - begin[s];
  }
  std::span<const double> target_intensities() const {
    return std::span<const double>(slab_intensities).subspan(target_offset, voxels());
  }

  /// Fills g_sum / q2_sum from the per-neighbour arrays.
  void compute_shell_sums();

  friend bool operator==(const AttractionCache&, const AttractionCache&) = default;
};

AttractionCache build_cache(const Volume& volume, std::size_t z, const NeighborhoodSpec& spec);

}  // namespace pifcm
