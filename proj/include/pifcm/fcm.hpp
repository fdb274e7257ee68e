#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pifcm/parallel.hpp"

namespace pifcm {

struct FcmConfig {
  int clusters = 4;
  double m = 2.0;
  double eps = 1e-3;
  int max_iter = 300;

  /// Throws std::invalid_argument when c < 2, m <= 1, eps <= 0 or max_iter < 1.
  void validate() const;
};

/// Row-major voxels x clusters fuzzy memberships.
class MembershipMatrix {
 public:
  MembershipMatrix() = default;
  MembershipMatrix(std::size_t rows, std::size_t clusters, double fill = 0.0)
      : rows_(rows), clusters_(clusters), values_(rows * clusters, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t clusters() const { return clusters_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * clusters_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * clusters_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * clusters_, clusters_);
  }
  std::span<double> row(std::size_t i) {
    return std::span<double>(values_).subspan(i * clusters_, clusters_);
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Largest |this - other| over all entries.
  double max_abs_diff(const MembershipMatrix& other) const;
  /// Largest |row sum - 1|.
  double max_row_sum_error() const;

  friend bool operator==(const MembershipMatrix&, const MembershipMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t clusters_ = 0;
  std::vector<double> values_;
};

struct ClusterSet {
  std::vector<double> centers;

  std::size_t size() const { return centers.size(); }
  friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

/// FCM membership update for one voxel given squared distances to every center. Any zero
/// distance makes the row crisp at the first such cluster.
void membership_row(std::span<const double> dist2, double m, std::span<double> out);

/// u^m, shared by every cost and center computation.
double pow_m(double u, double m);

/// Per-chunk partial sums for the center update and the cost.
struct CenterPartials {
  std::vector<double> weighted;  // sum u^m x
  std::vector<double> weights;   // sum u^m
  double cost = 0.0;             // sum u^m d^2

  explicit CenterPartials(std::size_t clusters = 0)
      : weighted(clusters, 0.0), weights(clusters, 0.0) {}
  void add(const CenterPartials& other);
};

CenterPartials combine_partials(std::vector<CenterPartials> parts);

/// Centers from accumulated partials; clusters whose weight underflows keep
/// their previous center.
ClusterSet centers_from_partials(const CenterPartials& total, const ClusterSet& previous);

/// Initial centers from a 1-D Gaussian mixture fitted by EM to the slice's
/// intensity histogram. EM runs from each k-quantile start; the fit with the
/// lowest FCM cost is kept. Falls back to the midpoints of c equal slices of
/// [min, max] when the slice has fewer than c distinct intensities.
ClusterSet init_centers(std::span<const double> slice, int clusters, std::uint64_t seed);

MembershipMatrix fcm_membership(std::span<const double> slice, const ClusterSet& centers,
                                double m);

/// Weighted-mean center update. `previous` supplies the value for clusters with no membership mass.
ClusterSet fcm_centers(std::span<const double> slice, const MembershipMatrix& u, double m,
                       const ClusterSet& previous);

/// Objective J with plain squared intensity distance.
double fcm_cost(std::span<const double> slice, const MembershipMatrix& u,
                const ClusterSet& centers, double m);

struct FcmResult {
  ClusterSet centers;
  MembershipMatrix u;
  /// J(U_t, C_{t-1}) per iteration: cost of the fresh memberships measured
  /// against the centers they were computed from.
  std::vector<double> cost_history;
  int iterations = 0;
};

/// Alternates membership and center updates from init_centers() until max |dU| < eps or
/// max_iter iterations.
FcmResult fcm_run(std::span<const double> slice, const FcmConfig& cfg, std::uint64_t seed);

/// Same loop starting from explicit centers.
FcmResult fcm_run_from(std::span<const double> slice, const FcmConfig& cfg,
                       ClusterSet centers);

}  // namespace pifcm
