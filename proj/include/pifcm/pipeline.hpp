#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pifcm/attraction.hpp"
#include "pifcm/fcm.hpp"
#include "pifcm/ifcm.hpp"
#include "pifcm/parallel.hpp"
#include "pifcm/pso.hpp"
#include "pifcm/volume.hpp"

namespace pifcm {

struct PipelineConfig {
  int clusters = 4;
  double m = 2.0;
  double eps = 1e-3;
  /// Target slice; unset selects nz / 2.
  std::optional<std::size_t> z;
  NeighborhoodSpec spec;
  SwarmConfig swarm;
  Backend backend = Backend::parallel;
  unsigned workers = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 0;
  int init_max_iter = 300;
  int final_max_iter = 100;
  /// Skips the swarm and runs the final IFCM at these parameters.
  std::optional<AttractionParams> fixed_params;

  void validate(const Dims& dims) const;
  std::size_t target_slice(const Dims& dims) const { return z ? *z : dims.nz / 2; }
};

struct PhaseTimings {
  double normalize = 0.0;
  double cache = 0.0;
  double init = 0.0;
  double swarm = 0.0;
  double final_run = 0.0;
  double defuzzify = 0.0;
  double total = 0.0;

  double phase_sum() const {
    return normalize + cache + init + swarm + final_run + defuzzify;
  }
};

struct SegmentationResult {
  ClusterSet centers;
  MembershipMatrix u;
  LabelVolume labels;  // one slice: dims (nx, ny, 1)
  std::size_t z = 0;
  double lambda_star = 0.0;
  double xi_star = 0.0;
  double cost = 0.0;
  PhaseTimings timings;
  int init_iterations = 0;
  int swarm_iterations = 0;
  std::size_t swarm_evaluations = 0;
  int final_iterations = 0;
};

/// Per-row argmax; ties resolve to the lowest cluster index.
std::vector<int> defuzzify(const MembershipMatrix& u);

/// Normalise, cache the target slice's neighbourhood, initialise with
/// histogram-GMM FCM, search (lambda, xi) with the swarm, then run IFCM to
/// convergence from the best particle's state.
SegmentationResult run_3dpifcm(const Volume& volume, const PipelineConfig& cfg);

/// Plain FCM with the same initialisation, defuzzified.
SegmentationResult run_fcm(const Volume& volume, const PipelineConfig& cfg);

}  // namespace pifcm
