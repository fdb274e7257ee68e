#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pifcm/attraction.hpp"
#include "pifcm/fcm.hpp"
#include "pifcm/ifcm.hpp"
#include "pifcm/parallel.hpp"

namespace pifcm {

/// Position in the (lambda, xi) plane.
using Point2 = std::array<double, 2>;

inline constexpr double kMaxVelocity = 0.5;

struct Particle {
  Point2 position{};
  Point2 velocity{};
  double pbest = std::numeric_limits<double>::infinity();
  Point2 pbest_pos{};
  /// Per-particle random stream, derived from the swarm seed.
  std::mt19937_64 rng;
};

/// square: lambda, xi in [0,1] independently. simplex: additionally
/// lambda + xi <= 1, which keeps 1 - lambda*H - xi*F non-negative.
enum class SearchDomain { square, simplex };

SearchDomain parse_search_domain(const std::string& text);
std::string to_string(SearchDomain domain);

/// Nearest point of the domain (Euclidean).
Point2 project(const Point2& p, SearchDomain domain);

struct SwarmConfig {
  int particles = 10;
  int ring_k = 1;      // local-best neighbourhood radius on the index ring
  int max_iter = 30;
  double tol = 1e-4;   // |change of global best| counted as "no progress"
  int patience = 3;    // consecutive no-progress iterations before stopping
  std::uint64_t seed = 0;
  SearchDomain domain = SearchDomain::simplex;

  void validate() const;
};

struct Swarm {
  SwarmConfig config;
  std::vector<Particle> particles;
  double best = std::numeric_limits<double>::infinity();
  Point2 best_pos{};
  std::size_t best_index = 0;
  std::size_t evaluations = 0;
  /// Global best after each step_swarm call.
  std::vector<double> history;
};

using Fitness = std::function<double(const AttractionParams&)>;

Swarm init_swarm(const SwarmConfig& cfg);

/// v + p1 (pbest - x) + p2 (lbest - x), each component clamped to
/// [-kMaxVelocity, kMaxVelocity].
Point2 update_velocity(const Particle& particle, const Point2& lbest_pos, double p1, double p2);

/// Same rule with p1, p2 ~ U(0,1) drawn from rng.
Point2 update_velocity(const Particle& particle, const Point2& lbest_pos, std::mt19937_64& rng);

/// Best personal-best position among ring neighbours [i-k, i+k] (mod P).
Point2 local_best(const Swarm& swarm, std::size_t index);

/// Evaluates every particle, refreshes personal and local bests, then moves
/// all particles and projects positions back into the search domain.
void step_swarm(Swarm& swarm, const Fitness& fitness);

struct PsoResult {
  AttractionParams best;
  double best_cost = 0.0;
  StepResult step;  // the step evaluated at `best`
  int iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> history;
};

/// Searches (lambda, xi) with fitness = cost of one ifcm_step from (u0, c0).
/// Stops once the global best changes by less than tol for `patience`
/// consecutive iterations, or after max_iter iterations.
PsoResult pso_optimize(std::span<const double> slice, const MembershipMatrix& u0,
                       const ClusterSet& c0, const AttractionCache& cache, double m,
                       const SwarmConfig& cfg, const Executor& exec);

}  // namespace pifcm
