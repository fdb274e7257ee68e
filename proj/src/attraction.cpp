#include "pifcm/attraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace pifcm {

namespace {

struct Offset {
  std::int64_t dx, dy, dz;
};

// Offsets at Chebyshev distance exactly r, ordered z, y, x.
std::vector<Offset> ring_offsets(int r, NeighborhoodMode mode) {
  std::vector<Offset> out;
  const std::int64_t zr = mode == NeighborhoodMode::volumetric ? r : 0;
  for (std::int64_t dz = -zr; dz <= zr; ++dz) {
    for (std::int64_t dy = -r; dy <= r; ++dy) {
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        const auto cheb = std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
        if (cheb == r) out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

}  // namespace

NeighborhoodMode parse_mode(const std::string& text) {
  if (text == "2d" || text == "2D") return NeighborhoodMode::planar;
  if (text == "3d" || text == "3D") return NeighborhoodMode::volumetric;
  throw std::invalid_argument("unknown neighbourhood mode '" + text + "' (2d|3d)");
}

const char* to_string(NeighborhoodMode mode) {
  return mode == NeighborhoodMode::planar ? "2d" : "3d";
}

void NeighborhoodSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("shell depth v must be >= 1");
  if (!(decay > 0.0) || !std::isfinite(decay)) {
    throw std::invalid_argument("exponential decay h must be > 0");
  }
}

std::vector<double> shell_weights(int depth, double decay) {
  NeighborhoodSpec{depth, decay}.validate();
  std::vector<double> w(static_cast<std::size_t>(depth));
  // Scaling every term by e^{1/h} leaves the ratios unchanged and keeps the
  // leading term at 1, so small h cannot underflow the whole sum.
  double total = 0.0;
  for (int r = 1; r <= depth; ++r) {
    w[static_cast<std::size_t>(r - 1)] = std::exp(-(r - 1) / decay);
    total += w[static_cast<std::size_t>(r - 1)];
  }
  for (double& x : w) x /= total;
  return w;
}

ShellTable build_shells(const Dims& dims, std::size_t z, const NeighborhoodSpec& spec) {
  spec.validate();
  if (z >= dims.nz) throw std::invalid_argument("target slice out of range");
  ShellTable t;
  t.voxels = dims.slice_voxels();
  t.depth = spec.depth;
  std::vector<std::vector<Offset>> rings;
  for (int r = 1; r <= spec.depth; ++r) rings.push_back(ring_offsets(r, spec.mode));

  t.begin.reserve(t.voxels * static_cast<std::size_t>(spec.depth) + 1);
  t.begin.push_back(0);
  const auto nx = static_cast<std::int64_t>(dims.nx);
  const auto ny = static_cast<std::int64_t>(dims.ny);
  const auto nz = static_cast<std::int64_t>(dims.nz);
  const auto zi = static_cast<std::int64_t>(z);
  for (std::int64_t y = 0; y < ny; ++y) {
    for (std::int64_t x = 0; x < nx; ++x) {
      for (const auto& ring : rings) {
        for (const auto& o : ring) {
          const std::int64_t xx = x + o.dx, yy = y + o.dy, zz = zi + o.dz;
          if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz) continue;
          t.offset_x.push_back(o.dx);
          t.offset_y.push_back(o.dy);
          t.offset_z.push_back(o.dz);
          t.volume_index.push_back(dims.index(static_cast<std::size_t>(xx),
                                              static_cast<std::size_t>(yy),
                                              static_cast<std::size_t>(zz)));
        }
        t.begin.push_back(t.volume_index.size());
      }
    }
  }
  return t;
}

void AttractionCache::compute_shell_sums() {
  const std::size_t slots = begin.empty() ? 0 : begin.size() - 1;
  g_sum.assign(slots, 0.0);
  q2_sum.assign(slots, 0.0);
  for (std::size_t s = 0; s < slots; ++s) {
    for (std::size_t k = begin[s]; k < begin[s + 1]; ++k) {
      g_sum[s] += g[k];
      q2_sum[s] += q[k] * q[k];
    }
  }
}

AttractionCache build_cache(const Volume& volume, std::size_t z, const NeighborhoodSpec& spec) {
  if (!volume.normalized) {
    throw std::invalid_argument("attraction cache requires a normalized volume");
  }
  const Dims& dims = volume.dims;
  const ShellTable shells = build_shells(dims, z, spec);

  AttractionCache cache;
  cache.nx = dims.nx;
  cache.ny = dims.ny;
  cache.z = z;
  cache.spec = spec;
  cache.weights = shell_weights(spec.depth, spec.decay);

  const auto reach = spec.mode == NeighborhoodMode::volumetric
                         ? static_cast<std::size_t>(spec.depth)
                         : std::size_t{0};
  cache.slab_z0 = z - std::min(z, reach);
  const std::size_t slab_z1 = std::min(dims.nz - 1, z + reach);
  cache.slab_nz = slab_z1 - cache.slab_z0 + 1;
  const std::size_t plane = dims.slice_voxels();
  cache.target_offset = (z - cache.slab_z0) * plane;
  if (cache.slab_nz * plane > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("slab too large for 32-bit neighbour indices");
  }
  const auto slab_begin = volume.data.begin() + static_cast<std::ptrdiff_t>(cache.slab_z0 * plane);
  cache.slab_intensities.assign(slab_begin,
                                slab_begin + static_cast<std::ptrdiff_t>(cache.slab_nz * plane));

  cache.begin = shells.begin;
  const std::size_t n = shells.volume_index.size();
  cache.neighbor.resize(n);
  cache.g.resize(n);
  cache.q.resize(n);
  const auto target = cache.target_intensities();
  for (std::size_t i = 0; i < plane; ++i) {
    const double xi = target[i];
    const auto first = shells.begin[i * static_cast<std::size_t>(spec.depth)];
    const auto last = shells.begin[(i + 1) * static_cast<std::size_t>(spec.depth)];
    for (std::size_t k = first; k < last; ++k) {
      const std::size_t local = shells.volume_index[k] - cache.slab_z0 * plane;
      cache.neighbor[k] = static_cast<std::uint32_t>(local);
      cache.g[k] = std::abs(xi - cache.slab_intensities[local]);
      const auto dx = static_cast<double>(shells.offset_x[k]);
      const auto dy = static_cast<double>(shells.offset_y[k]);
      const auto dz = static_cast<double>(shells.offset_z[k]);
      cache.q[k] = dx * dx + dy * dy + dz * dz;
    }
  }
  cache.compute_shell_sums();
  return cache;
}

}  // namespace pifcm
