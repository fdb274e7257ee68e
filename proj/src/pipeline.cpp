#include "pifcm/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "pifcm/random.hpp"

namespace pifcm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FcmConfig init_config(const PipelineConfig& cfg) {
  return FcmConfig{cfg.clusters, cfg.m, cfg.eps, cfg.init_max_iter};
}

LabelVolume slice_labels(const Dims& dims, std::vector<int> labels, int clusters) {
  return LabelVolume{{dims.nx, dims.ny, 1}, std::move(labels), clusters};
}

}  // namespace

void PipelineConfig::validate(const Dims& dims) const {
  init_config(*this).validate();
  spec.validate();
  swarm.validate();
  if (target_slice(dims) >= dims.nz) {
    throw std::invalid_argument("target slice " + std::to_string(target_slice(dims)) +
                                " out of range (nz=" + std::to_string(dims.nz) + ")");
  }
  if (final_max_iter < 1) throw std::invalid_argument("final_max_iter must be >= 1");
  if (fixed_params) fixed_params->validate();
}

std::vector<int> defuzzify(const MembershipMatrix& u) {
  std::vector<int> labels(u.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const auto row = u.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

SegmentationResult run_3dpifcm(const Volume& volume, const PipelineConfig& cfg) {
  cfg.validate(volume.dims);
  const auto total_start = Clock::now();
  SegmentationResult out;
  out.z = cfg.target_slice(volume.dims);
  const Executor exec = Executor::make(cfg.backend, cfg.workers);

  auto t = Clock::now();
  const Volume normalized = normalize_minmax(volume);
  out.timings.normalize = seconds_since(t);

  t = Clock::now();
  const AttractionCache cache = build_cache(normalized, out.z, cfg.spec);
  out.timings.cache = seconds_since(t);
  const auto slice = normalized.slice(out.z);

  t = Clock::now();
  FcmResult init = fcm_run(slice, init_config(cfg), derive_seed(cfg.seed, kStreamCenterInit));
  out.init_iterations = init.iterations;
  out.timings.init = seconds_since(t);

  t = Clock::now();
  AttractionParams params;
  MembershipMatrix start_u;
  ClusterSet start_c;
  if (cfg.fixed_params) {
    params = *cfg.fixed_params;
    start_u = std::move(init.u);
    start_c = std::move(init.centers);
  } else {
    SwarmConfig swarm = cfg.swarm;
    swarm.seed = derive_seed(cfg.seed, kStreamSwarm);
    PsoResult pso = pso_optimize(slice, init.u, init.centers, cache, cfg.m, swarm, exec);
    params = pso.best;
    start_u = std::move(pso.step.u);
    start_c = std::move(pso.step.centers);
    out.swarm_iterations = pso.iterations;
    out.swarm_evaluations = pso.evaluations;
  }
  out.timings.swarm = seconds_since(t);
  out.lambda_star = params.lambda;
  out.xi_star = params.xi;

  t = Clock::now();
  IfcmRunResult final_run = ifcm_run(slice, start_u, start_c, cache, params, cfg.m, cfg.eps,
                                     cfg.final_max_iter, exec);
  out.final_iterations = final_run.iterations;
  out.timings.final_run = seconds_since(t);

  t = Clock::now();
  out.labels = slice_labels(volume.dims, defuzzify(final_run.result.u), cfg.clusters);
  out.timings.defuzzify = seconds_since(t);

  out.centers = std::move(final_run.result.centers);
  out.u = std::move(final_run.result.u);
  out.cost = final_run.result.cost;
  out.timings.total = seconds_since(total_start);
  return out;
}

SegmentationResult run_fcm(const Volume& volume, const PipelineConfig& cfg) {
  cfg.validate(volume.dims);
  const auto total_start = Clock::now();
  SegmentationResult out;
  out.z = cfg.target_slice(volume.dims);

  auto t = Clock::now();
  const Volume normalized = normalize_minmax(volume);
  out.timings.normalize = seconds_since(t);
  const auto slice = normalized.slice(out.z);

  t = Clock::now();
  FcmResult fcm = fcm_run(slice, init_config(cfg), derive_seed(cfg.seed, kStreamCenterInit));
  out.init_iterations = fcm.iterations;
  out.timings.init = seconds_since(t);

  t = Clock::now();
  out.labels = slice_labels(volume.dims, defuzzify(fcm.u), cfg.clusters);
  out.timings.defuzzify = seconds_since(t);

  out.cost = fcm.cost_history.empty() ? 0.0 : fcm.cost_history.back();
  out.centers = std::move(fcm.centers);
  out.u = std::move(fcm.u);
  out.timings.total = seconds_since(total_start);
  return out;
}

}  // namespace pifcm
