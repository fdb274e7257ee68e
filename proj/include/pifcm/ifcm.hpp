#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pifcm/attraction.hpp"
#include "pifcm/fcm.hpp"
#include "pifcm/parallel.hpp"

namespace pifcm {

/// Feature (lambda) and neighbourhood (xi) attraction weights, both in [0,1].
struct AttractionParams {
  double lambda = 0.0;
  double xi = 0.0;

  void validate() const;
  friend bool operator==(const AttractionParams&, const AttractionParams&) = default;
};

/// Lower bound on the attraction factor 1 - lambda*H - xi*F.
inline constexpr double kAttractionFloor = 1e-9;

/// Memberships of every voxel in the cache slab, read by the attraction
/// terms. Target-slice rows come from the previous U; rows of the other
/// slab slices carry no U of their own and are evaluated with the plain FCM membership rule
/// against the current centers.
struct SlabMembership {
  std::size_t clusters = 0;
  std::vector<double> values;

  double operator()(std::size_t slab_index, std::size_t j) const {
    return values[slab_index * clusters + j];
  }
};

SlabMembership slab_memberships(const MembershipMatrix& u, const ClusterSet& centers,
                                const AttractionCache& cache, double m);

/// H_ij: shell-weighted, g-weighted average of neighbour memberships.
/// Shells whose g sum is below 1e-12 contribute 0.
double feature_attraction(std::size_t i, std::size_t j, const SlabMembership& u,
                          const AttractionCache& cache);

/// F_ij: shell-weighted, q^2-weighted average of squared neighbour memberships.
double neighborhood_attraction(std::size_t i, std::size_t j, const SlabMembership& u,
                               const AttractionCache& cache);

/// (x - c)^2 * max(1 - lambda*H - xi*F, kAttractionFloor).
double attraction_distance(double x, double center, double h, double f,
                           const AttractionParams& params);

struct StepResult {
  MembershipMatrix u;
  ClusterSet centers;
  double cost = 0.0;
};

/// One IFCM iteration: memberships from attraction-modified distances, then
/// centers, then the cost of the new memberships under those distances.
///
/// Attraction terms read the input U only (never rows updated in this
/// step), so rows are computed independently per chunk. Reductions combine
/// fixed-size chunk partials in a fixed tree, making the result identical
/// for any executor.
StepResult ifcm_step(std::span<const double> slice, const MembershipMatrix& u,
                     const ClusterSet& centers, const AttractionCache& cache,
                     const AttractionParams& params, double m, const Executor& exec);

struct IfcmRunResult {
  StepResult result;
  int iterations = 0;
};

/// Repeats ifcm_step until max |dU| < eps or max_iter steps.
IfcmRunResult ifcm_run(std::span<const double> slice, const MembershipMatrix& u0,
                       const ClusterSet& c0, const AttractionCache& cache,
                       const AttractionParams& params, double m, double eps, int max_iter,
                       const Executor& exec);

}  // namespace pifcm
