#include <doctest.h>

#include <cmath>

#include "pifcm/bench.hpp"
#include "pifcm/ifcm.hpp"
#include "pifcm/pipeline.hpp"
#include "reference_ifcm.hpp"
#include "test_util.hpp"

using namespace pifcm;

namespace {

// Cache with one voxel whose single shell holds exactly the given
// neighbours; lets H and F be checked against hand arithmetic.
struct Hand {
  AttractionCache cache;
  SlabMembership u;
};

Hand one_shell(std::vector<double> g, std::vector<double> q, std::vector<double> memberships) {
  Hand h;
  h.cache.nx = 1;
  h.cache.ny = 1;
  h.cache.weights = {1.0};
  h.cache.begin = {0, g.size()};
  for (std::size_t k = 0; k < g.size(); ++k) h.cache.neighbor.push_back(static_cast<std::uint32_t>(k + 1));
  h.cache.g = std::move(g);
  h.cache.q = std::move(q);
  h.cache.compute_shell_sums();
  // Slab slot 0 is the target voxel; one cluster.
  h.u.clusters = 1;
  h.u.values.push_back(0.0);
  h.u.values.insert(h.u.values.end(), memberships.begin(), memberships.end());
  return h;
}

}  // namespace

TEST_CASE("feature attraction by hand") {
  auto h = one_shell({0.3}, {1.0}, {0.6});
  CHECK(std::abs(feature_attraction(0, 0, h.u, h.cache) - 0.6) < 1e-15);
  h = one_shell({0.0, 0.0}, {1.0, 2.0}, {0.6, 0.9});
  CHECK(feature_attraction(0, 0, h.u, h.cache) == 0.0);
  h = one_shell({0.1, 0.4, 0.2}, {1.0, 2.0, 3.0}, {1.0, 1.0, 1.0});
  CHECK(std::abs(feature_attraction(0, 0, h.u, h.cache) - 1.0) < 1e-15);
}

TEST_CASE("neighbourhood attraction by hand") {
  auto h = one_shell({0.3}, {2.0}, {0.5});
  CHECK(std::abs(neighborhood_attraction(0, 0, h.u, h.cache) - 0.25) < 1e-15);
  h = one_shell({0.1, 0.2}, {1.0, 2.0}, {0.0, 0.0});
  CHECK(neighborhood_attraction(0, 0, h.u, h.cache) == 0.0);
  h = one_shell({0.1, 0.2}, {1.0, 3.0}, {1.0, 1.0});
  CHECK(std::abs(neighborhood_attraction(0, 0, h.u, h.cache) - 1.0) < 1e-15);
}

TEST_CASE("attraction distance") {
  CHECK(attraction_distance(0.7, 0.4, 0.6, 0.25, {0.0, 0.0}) == (0.7 - 0.4) * (0.7 - 0.4));
  CHECK(std::abs(attraction_distance(0.7, 0.4, 0.6, 0.25, {0.5, 0.2}) - 0.0585) < 1e-15);
  CHECK(std::abs(attraction_distance(0.7, 0.4, 1.0, 1.0, {1.0, 1.0}) - 0.09 * 1e-9) < 1e-24);
  CHECK_THROWS(AttractionParams{1.2, 0.0}.validate());
  CHECK_THROWS(AttractionParams{0.0, -0.1}.validate());
}

TEST_CASE("H and F stay in [0,1] on random data") {
  Rng rng(41);
  const Volume v = random_volume(rng, {9, 8, 5});
  const AttractionCache cache = build_cache(v, 2, {2, 0.8, NeighborhoodMode::volumetric});
  const MembershipMatrix u = random_membership(rng, 72, 3);
  const SlabMembership slab = slab_memberships(u, random_centers(rng, 3), cache, 2.0);
  for (std::size_t i = 0; i < 72; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double h = feature_attraction(i, j, slab, cache);
      const double f = neighborhood_attraction(i, j, slab, cache);
      CHECK(h >= 0.0);
      CHECK(h <= 1.0 + 1e-12);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("zero attraction reduces to an FCM step") {
  Rng rng(42);
  const Executor seq;
  for (int t = 0; t < 10; ++t) {
    const Volume v = random_volume(rng, {13, 11, 4});
    const std::size_t c = 2 + t % 3;
    const AttractionCache cache = build_cache(v, 1, {2, 1.0, NeighborhoodMode::volumetric});
    const MembershipMatrix u = random_membership(rng, 143, c);
    const ClusterSet centers = random_centers(rng, c);
    const StepResult s = ifcm_step(v.slice(1), u, centers, cache, {0.0, 0.0}, 2.0, seq);
    const MembershipMatrix fu = fcm_membership(v.slice(1), centers, 2.0);
    CHECK(s.u.max_abs_diff(fu) <= 1e-12);
    const ClusterSet fc = fcm_centers(v.slice(1), fu, 2.0, centers);
    CHECK(max_abs_diff(s.centers.centers, fc.centers) <= 1e-12);
  }
}

TEST_CASE("step matches the uncached reference") {
  Rng rng(43);
  const Executor par = Executor::parallel(3);
  for (int t = 0; t < 6; ++t) {
    const bool planar = t % 3 == 2;
    const int v = 1 + t % 2;
    const Dims d{8, 8, 5};
    const Volume vol = random_volume(rng, d);
    const std::size_t z = static_cast<std::size_t>(t % 5);
    const std::size_t c = 2 + t % 2;
    const double m = t % 2 ? 2.0 : 1.7;
    const double h = 0.5 + t * 0.3;
    const AttractionParams params{0.1 + 0.15 * t, 0.8 - 0.1 * t};
    const AttractionCache cache = build_cache(
        vol, z, {v, h, planar ? NeighborhoodMode::planar : NeighborhoodMode::volumetric});
    const MembershipMatrix u = random_membership(rng, 64, c);
    const ClusterSet centers = random_centers(rng, c);

    const StepResult got = ifcm_step(vol.slice(z), u, centers, cache, params, m, par);
    const reference::Step want =
        reference::ifcm_step(vol.data, 8, 8, 5, static_cast<int>(z), to_vector(u.values()),
                             centers.centers, params.lambda, params.xi, m, v, h, planar);
    CHECK(max_abs_diff(to_vector(got.u.values()), want.u) < 1e-9);
    CHECK(max_abs_diff(got.centers.centers, want.centers) < 1e-9);
    CHECK(std::abs(got.cost - want.cost) < 1e-9);
  }
}

TEST_CASE("rows stay stochastic and cost non-negative at extreme parameters") {
  Rng rng(44);
  const Volume v = random_volume(rng, {16, 16, 3});
  const AttractionCache cache = build_cache(v, 1, {2, 1.0, NeighborhoodMode::volumetric});
  for (const AttractionParams p : {AttractionParams{1, 1}, {1, 0}, {0, 1}, {0.5, 0.5}}) {
    const StepResult s = ifcm_step(v.slice(1), random_membership(rng, 256, 4),
                                   random_centers(rng, 4), cache, p, 2.0, Executor{});
    CHECK(s.u.max_row_sum_error() < 1e-9);
    CHECK(s.cost >= 0.0);
  }
}

TEST_CASE("sequential and parallel steps are bit-identical") {
  Rng rng(45);
  const Volume v = random_volume(rng, {40, 37, 5});
  const AttractionCache cache = build_cache(v, 2, {2, 1.0, NeighborhoodMode::volumetric});
  const MembershipMatrix u = random_membership(rng, 40 * 37, 3);
  const ClusterSet c = random_centers(rng, 3);
  const StepResult a = ifcm_step(v.slice(2), u, c, cache, {0.4, 0.3}, 2.0, Executor{});
  const StepResult b = ifcm_step(v.slice(2), u, c, cache, {0.4, 0.3}, 2.0, Executor::parallel(4));
  CHECK(a.u == b.u);
  CHECK(a.centers == b.centers);
  CHECK(a.cost == b.cost);
}

TEST_CASE("ifcm_run iteration accounting") {
  Rng rng(46);
  const Volume v = random_volume(rng, {12, 12, 3});
  const AttractionCache cache = build_cache(v, 1, {1, 1.0, NeighborhoodMode::volumetric});
  const MembershipMatrix u = random_membership(rng, 144, 2);
  const ClusterSet c = random_centers(rng, 2);
  CHECK(ifcm_run(v.slice(1), u, c, cache, {0.2, 0.2}, 2.0, 1e9, 50, Executor{}).iterations == 1);
  CHECK(ifcm_run(v.slice(1), u, c, cache, {0.2, 0.2}, 2.0, 1e-300, 7, Executor{}).iterations == 7);
}

TEST_CASE("zero attraction on a noiseless phantom matches FCM labels") {
  const auto [vol, truth] = generate_phantom({32, 0, {0.1, 0.35, 0.65, 0.9}});
  const std::size_t z = vol.dims.nz / 2;
  const FcmResult f = fcm_run(vol.slice(z), FcmConfig{4, 2.0, 1e-3, 300}, 1);
  const AttractionCache cache = build_cache(vol, z, {2, 1.0, NeighborhoodMode::volumetric});
  const IfcmRunResult r =
      ifcm_run(vol.slice(z), f.u, f.centers, cache, {0.0, 0.0}, 2.0, 1e-3, 100, Executor{});
  CHECK(defuzzify(r.result.u) == defuzzify(f.u));
}

TEST_CASE("tuned attraction beats FCM on a 5% noise phantom") {
  auto [clean, truth] = generate_phantom({55, 0, {0.1, 0.35, 0.65, 0.9}});
  const Volume noisy = add_gaussian_noise(clean, 5.0, 77);
  PipelineConfig cfg;
  cfg.backend = Backend::sequential;
  cfg.seed = 3;
  const SegmentationResult fcm = run_fcm(noisy, cfg);
  const SegmentationResult ifcm = run_3dpifcm(noisy, cfg);
  const LabelVolume t = truth.slice_volume(fcm.z);
  CHECK(incorrect_segmentation(ifcm.labels, t) < incorrect_segmentation(fcm.labels, t));
}
