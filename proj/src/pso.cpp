#include "pifcm/pso.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "pifcm/random.hpp"

namespace pifcm {

namespace {

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SearchDomain parse_search_domain(const std::string& text) {
  if (text == "square") return SearchDomain::square;
  if (text == "simplex") return SearchDomain::simplex;
  throw std::invalid_argument("unknown search domain '" + text + "' (square|simplex)");
}

std::string to_string(SearchDomain domain) {
  return domain == SearchDomain::square ? "square" : "simplex";
}

Point2 project(const Point2& p, SearchDomain domain) {
  Point2 q{clamp_unit(p[0]), clamp_unit(p[1])};
  if (domain == SearchDomain::square || q[0] + q[1] <= 1.0) return q;
  const double t = 0.5 * (q[0] + q[1] - 1.0);
  q = {q[0] - t, q[1] - t};
  if (q[0] < 0.0) return {0.0, 1.0};
  if (q[1] < 0.0) return {1.0, 0.0};
  return q;
}

void SwarmConfig::validate() const {
  // A single particle is allowed: its ring neighbourhood is itself.
  if (particles < 1) throw std::invalid_argument("swarm needs at least one particle");
  if (ring_k < 1) throw std::invalid_argument("ring_k must be >= 1");
  if (max_iter < 1) throw std::invalid_argument("swarm max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("swarm tol must be > 0");
  if (patience < 1) throw std::invalid_argument("swarm patience must be >= 1");
}

Swarm init_swarm(const SwarmConfig& cfg) {
  cfg.validate();
  Swarm swarm;
  swarm.config = cfg;
  swarm.particles.resize(static_cast<std::size_t>(cfg.particles));
  for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
    Particle& p = swarm.particles[i];
    p.rng.seed(derive_seed(cfg.seed, i));
    std::uniform_real_distribution<double> pos(0.0, 1.0), vel(-0.1, 0.1);
    p.position = {pos(p.rng), pos(p.rng)};
    // Folding the upper triangle keeps the draw uniform over the simplex.
    if (cfg.domain == SearchDomain::simplex && p.position[0] + p.position[1] > 1.0) {
      p.position = {1.0 - p.position[0], 1.0 - p.position[1]};
    }
    p.velocity = {vel(p.rng), vel(p.rng)};
    p.pbest_pos = p.position;
  }
  return swarm;
}

Point2 update_velocity(const Particle& particle, const Point2& lbest_pos, double p1, double p2) {
  Point2 v{};
  for (std::size_t d = 0; d < 2; ++d) {
    const double raw = particle.velocity[d] +
                       p1 * (particle.pbest_pos[d] - particle.position[d]) +
                       p2 * (lbest_pos[d] - particle.position[d]);
    v[d] = std::clamp(raw, -kMaxVelocity, kMaxVelocity);
  }
  return v;
}

Point2 update_velocity(const Particle& particle, const Point2& lbest_pos, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double p1 = unit(rng);
  const double p2 = unit(rng);
  return update_velocity(particle, lbest_pos, p1, p2);
}

Point2 local_best(const Swarm& swarm, std::size_t index) {
  const auto n = static_cast<std::int64_t>(swarm.particles.size());
  const auto k = static_cast<std::int64_t>(std::min<std::int64_t>(swarm.config.ring_k, n / 2));
  const auto i = static_cast<std::int64_t>(index);
  std::size_t best = index;
  for (std::int64_t d = -k; d <= k; ++d) {
    const auto j = static_cast<std::size_t>(((i + d) % n + n) % n);
    if (swarm.particles[j].pbest < swarm.particles[best].pbest) best = j;
  }
  return swarm.particles[best].pbest_pos;
}

void step_swarm(Swarm& swarm, const Fitness& fitness) {
  for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
    Particle& p = swarm.particles[i];
    const double f = fitness(AttractionParams{p.position[0], p.position[1]});
    ++swarm.evaluations;
    if (f < p.pbest) {
      p.pbest = f;
      p.pbest_pos = p.position;
    }
    if (p.pbest < swarm.best) {
      swarm.best = p.pbest;
      swarm.best_pos = p.pbest_pos;
      swarm.best_index = i;
    }
  }

  std::vector<Point2> lbest(swarm.particles.size());
  for (std::size_t i = 0; i < lbest.size(); ++i) lbest[i] = local_best(swarm, i);
  for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
    Particle& p = swarm.particles[i];
    p.velocity = update_velocity(p, lbest[i], p.rng);
    p.position = project({p.position[0] + p.velocity[0], p.position[1] + p.velocity[1]},
                         swarm.config.domain);
  }
  swarm.history.push_back(swarm.best);
}

PsoResult pso_optimize(std::span<const double> slice, const MembershipMatrix& u0,
                       const ClusterSet& c0, const AttractionCache& cache, double m,
                       const SwarmConfig& cfg, const Executor& exec) {
  Swarm swarm = init_swarm(cfg);
  std::optional<StepResult> best_step;
  double best_seen = std::numeric_limits<double>::infinity();
  const Fitness fitness = [&](const AttractionParams& params) {
    StepResult step = ifcm_step(slice, u0, c0, cache, params, m, exec);
    if (step.cost < best_seen) {
      best_seen = step.cost;
      best_step = std::move(step);
      return best_seen;
    }
    return step.cost;
  };

  PsoResult result;
  int stalled = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    step_swarm(swarm, fitness);
    result.iterations = iter;
    // inf - inf is NaN, which compares false and counts as progress.
    const double change = std::abs(previous - swarm.best);
    stalled = change < cfg.tol ? stalled + 1 : 0;
    previous = swarm.best;
    if (stalled >= cfg.patience) break;
  }

  if (!best_step) throw std::runtime_error("PSO fitness never produced a finite cost");
  result.best = AttractionParams{swarm.best_pos[0], swarm.best_pos[1]};
  result.best_cost = swarm.best;
  result.step = std::move(*best_step);
  result.evaluations = swarm.evaluations;
  result.history = std::move(swarm.history);
  return result;
}

}  // namespace pifcm
