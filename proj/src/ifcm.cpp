#include "pifcm/ifcm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pifcm {

namespace {

constexpr double kDegenerateShell = 1e-12;

// H and F for every cluster of voxel i. hn/fn are scratch of size c.
void attraction_terms(std::size_t i, const SlabMembership& u, const AttractionCache& cache,
                      std::span<double> h, std::span<double> f, std::span<double> hn,
                      std::span<double> fn) {
  const std::size_t c = u.clusters;
  std::fill(h.begin(), h.end(), 0.0);
  std::fill(f.begin(), f.end(), 0.0);
  const int depth = cache.depth();
  for (int r = 1; r <= depth; ++r) {
    const std::size_t s = cache.slot(i, r);
    const std::size_t first = cache.begin[s], last = cache.begin[s + 1];
    if (first == last) continue;
    std::fill(hn.begin(), hn.end(), 0.0);
    std::fill(fn.begin(), fn.end(), 0.0);
    for (std::size_t k = first; k < last; ++k) {
      const double* row = &u.values[cache.neighbor[k] * c];
      const double gk = cache.g[k];
      const double q2 = cache.q[k] * cache.q[k];
      for (std::size_t j = 0; j < c; ++j) {
        hn[j] += row[j] * gk;
        fn[j] += row[j] * row[j] * q2;
      }
    }
    const double w = cache.weights[static_cast<std::size_t>(r - 1)];
    const double gs = cache.g_sum[s];
    const double qs = cache.q2_sum[s];
    for (std::size_t j = 0; j < c; ++j) {
      if (gs >= kDegenerateShell) h[j] += w * (hn[j] / gs);
      if (qs > 0.0) f[j] += w * (fn[j] / qs);
    }
  }
}

void check_shapes(std::span<const double> slice, const MembershipMatrix& u,
                  const ClusterSet& centers, const AttractionCache& cache) {
  if (slice.size() != cache.voxels()) {
    throw std::invalid_argument("slice has " + std::to_string(slice.size()) +
                                " voxels but the attraction cache covers " +
                                std::to_string(cache.voxels()));
  }
  if (u.rows() != slice.size() || u.clusters() != centers.size()) {
    throw std::invalid_argument("membership matrix does not match slice/centers");
  }
}

SlabMembership slab_memberships(const MembershipMatrix& u, const ClusterSet& centers,
                                const AttractionCache& cache, double m, const Executor& exec) {
  const std::size_t c = centers.size();
  const std::size_t n = cache.slab_intensities.size();
  SlabMembership out{c, std::vector<double>(n * c)};
  const std::size_t target_end = cache.target_offset + cache.voxels();
  exec.for_each_chunk(chunk_count(n), [&](std::size_t chunk) {
    std::vector<double> dist2(c);
    const std::size_t end = std::min(n, (chunk + 1) * kChunkVoxels);
    for (std::size_t k = chunk * kChunkVoxels; k < end; ++k) {
      std::span<double> row(&out.values[k * c], c);
      if (k >= cache.target_offset && k < target_end) {
        const auto src = u.row(k - cache.target_offset);
        std::copy(src.begin(), src.end(), row.begin());
        continue;
      }
      for (std::size_t j = 0; j < c; ++j) {
        const double diff = cache.slab_intensities[k] - centers.centers[j];
        dist2[j] = diff * diff;
      }
      membership_row(dist2, m, row);
    }
  });
  return out;
}

}  // namespace

void AttractionParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0) || !(xi >= 0.0 && xi <= 1.0)) {
    throw std::invalid_argument("lambda and xi must lie in [0,1]");
  }
}

SlabMembership slab_memberships(const MembershipMatrix& u, const ClusterSet& centers,
                                const AttractionCache& cache, double m) {
  if (u.rows() != cache.voxels() || u.clusters() != centers.size()) {
    throw std::invalid_argument("membership matrix does not match cache/centers");
  }
  return slab_memberships(u, centers, cache, m, Executor());
}

double feature_attraction(std::size_t i, std::size_t j, const SlabMembership& u,
                          const AttractionCache& cache) {
  std::vector<double> h(u.clusters), f(u.clusters), hn(u.clusters), fn(u.clusters);
  attraction_terms(i, u, cache, h, f, hn, fn);
  return h.at(j);
}

double neighborhood_attraction(std::size_t i, std::size_t j, const SlabMembership& u,
                               const AttractionCache& cache) {
  std::vector<double> h(u.clusters), f(u.clusters), hn(u.clusters), fn(u.clusters);
  attraction_terms(i, u, cache, h, f, hn, fn);
  return f.at(j);
}

double attraction_distance(double x, double center, double h, double f,
                           const AttractionParams& params) {
  const double diff = x - center;
  const double factor = 1.0 - params.lambda * h - params.xi * f;
  return diff * diff * std::max(factor, kAttractionFloor);
}

StepResult ifcm_step(std::span<const double> slice, const MembershipMatrix& u,
                     const ClusterSet& centers, const AttractionCache& cache,
                     const AttractionParams& params, double m, const Executor& exec) {
  check_shapes(slice, u, centers, cache);
  const std::size_t n = slice.size();
  const std::size_t c = centers.size();
  const SlabMembership slab = slab_memberships(u, centers, cache, m, exec);

  StepResult out;
  out.u = MembershipMatrix(n, c);
  std::vector<CenterPartials> parts(chunk_count(n), CenterPartials(c));
  exec.for_each_chunk(parts.size(), [&](std::size_t chunk) {
    std::vector<double> h(c), f(c), hn(c), fn(c), dist2(c);
    CenterPartials& p = parts[chunk];
    const std::size_t end = std::min(n, (chunk + 1) * kChunkVoxels);
    for (std::size_t i = chunk * kChunkVoxels; i < end; ++i) {
      const double x = slice[i];
      attraction_terms(i, slab, cache, h, f, hn, fn);
      for (std::size_t j = 0; j < c; ++j) {
        dist2[j] = attraction_distance(x, centers.centers[j], h[j], f[j], params);
      }
      auto row = out.u.row(i);
      membership_row(dist2, m, row);
      for (std::size_t j = 0; j < c; ++j) {
        const double um = pow_m(row[j], m);
        p.weighted[j] += um * x;
        p.weights[j] += um;
        p.cost += um * dist2[j];
      }
    }
  });
  const CenterPartials total = combine_partials(std::move(parts));
  out.centers = centers_from_partials(total, centers);
  out.cost = total.cost;
  return out;
}

IfcmRunResult ifcm_run(std::span<const double> slice, const MembershipMatrix& u0,
                       const ClusterSet& c0, const AttractionCache& cache,
                       const AttractionParams& params, double m, double eps, int max_iter,
                       const Executor& exec) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  IfcmRunResult run;
  StepResult current{u0, c0, 0.0};
  for (int iter = 1; iter <= max_iter; ++iter) {
    StepResult next = ifcm_step(slice, current.u, current.centers, cache, params, m, exec);
    run.iterations = iter;
    const double change = next.u.max_abs_diff(current.u);
    current = std::move(next);
    if (change < eps) break;
  }
  run.result = std::move(current);
  return run;
}

}  // namespace pifcm
