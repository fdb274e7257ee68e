// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pifcm/attraction.hpp"
#include "pifcm/bench.hpp"
#include "pifcm/cli.hpp"
#include "pifcm/fcm.hpp"
#include "pifcm/ifcm.hpp"
#include "pifcm/pipeline.hpp"
#include "reference_ifcm.hpp"
#include "test_util.hpp"

using namespace pifcm;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = since(start);
  bool pass = o.pass;
  std::string detail = o.detail;
  if (limit_s > 0 && elapsed >= limit_s) {
    pass = false;
    detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s budget";
  }
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(),
              elapsed);
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const std::vector<double> kLevels{0.1, 0.35, 0.65, 0.9};

Outcome row_stochasticity() {
  Rng rng(101);
  std::uniform_int_distribution<std::size_t> side(1, 32), depth(1, 5);
  std::uniform_int_distribution<int> shells(1, 3), pick(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Executor exec = Executor::parallel(4);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Dims d{side(rng), side(rng), depth(rng)};
    const Volume v = random_volume(rng, d);
    const std::size_t z = std::uniform_int_distribution<std::size_t>(0, d.nz - 1)(rng);
    const std::size_t c = 2 + static_cast<std::size_t>(pick(rng));
    const double m = std::vector<double>{1.5, 2.0, 3.0}[pick(rng)];
    const NeighborhoodSpec spec{shells(rng), 0.2 + 3.0 * unit(rng),
                                t % 2 ? NeighborhoodMode::planar : NeighborhoodMode::volumetric};
    const AttractionCache cache = build_cache(v, z, spec);
    const StepResult s = ifcm_step(v.slice(z), random_membership(rng, d.slice_voxels(), c),
                                   random_centers(rng, c), cache, {unit(rng), unit(rng)}, m, exec);
    worst = std::max(worst, s.u.max_row_sum_error());
  }
  return {worst <= 1e-9, "max |row sum - 1| = " + fmt(worst, 3) + " over 1000 steps"};
}

Outcome fcm_reduction() {
  Rng rng(202);
  std::uniform_int_distribution<std::size_t> side(1, 32), depth(1, 5);
  std::uniform_int_distribution<int> pick(0, 2);
  const Executor exec = Executor::parallel(4);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Dims d{side(rng), side(rng), depth(rng)};
    const Volume v = random_volume(rng, d);
    const std::size_t z = d.nz / 2;
    const std::size_t c = 2 + static_cast<std::size_t>(pick(rng));
    const double m = std::vector<double>{1.5, 2.0, 3.0}[pick(rng)];
    const AttractionCache cache = build_cache(v, z, {2, 1.0, NeighborhoodMode::volumetric});
    const MembershipMatrix u = random_membership(rng, d.slice_voxels(), c);
    const ClusterSet centers = random_centers(rng, c);
    const StepResult s = ifcm_step(v.slice(z), u, centers, cache, {0.0, 0.0}, m, exec);
    const MembershipMatrix fu = fcm_membership(v.slice(z), centers, m);
    const ClusterSet fc = fcm_centers(v.slice(z), fu, m, centers);
    worst = std::max({worst, s.u.max_abs_diff(fu), max_abs_diff(s.centers.centers, fc.centers)});
  }
  return {worst <= 1e-12, "max elementwise difference " + fmt(worst, 3) + " over 100 instances"};
}

Outcome oracle() {
  Rng rng(303);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  const Executor exec = Executor::parallel(4);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Dims d{12, 12, 5};
    const Volume v = random_volume(rng, d);
    const int z = t % 5;
    const std::size_t c = 2 + static_cast<std::size_t>(pick(rng));
    const double m = std::vector<double>{1.5, 2.0, 3.0}[pick(rng)];
    const int shells = 1 + t % 3;
    const double h = 0.3 + 2.0 * unit(rng);
    const bool planar = t % 4 == 3;
    const AttractionParams params{unit(rng), unit(rng)};
    const AttractionCache cache = build_cache(
        v, z, {shells, h, planar ? NeighborhoodMode::planar : NeighborhoodMode::volumetric});
    const MembershipMatrix u = random_membership(rng, 144, c);
    const ClusterSet centers = random_centers(rng, c);
    const StepResult got = ifcm_step(v.slice(z), u, centers, cache, params, m, exec);
    const reference::Step want =
        reference::ifcm_step(v.data, 12, 12, 5, z, to_vector(u.values()), centers.centers,
                             params.lambda, params.xi, m, shells, h, planar);
    worst = std::max({worst, max_abs_diff(to_vector(got.u.values()), want.u),
                      max_abs_diff(got.centers.centers, want.centers),
                      std::abs(got.cost - want.cost)});
  }
  return {worst <= 1e-9, "max difference from the uncached reference " + fmt(worst, 3)};
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

Outcome backend_equivalence() {
  const auto [clean, truth] = generate_phantom({95, 0, kLevels});
  const Volume v = add_gaussian_noise(clean, 7.0, 404);
  const std::size_t z = v.dims.nz / 2;
  const FcmResult init = fcm_run(v.slice(z), FcmConfig{}, 1);
  const AttractionCache cache = build_cache(v, z, {2, 1.0, NeighborhoodMode::volumetric});
  const AttractionParams params{0.5, 0.4};
  const IfcmRunResult seq =
      ifcm_run(v.slice(z), init.u, init.centers, cache, params, 2.0, 1e-3, 100, Executor{});
  const IfcmRunResult par = ifcm_run(v.slice(z), init.u, init.centers, cache, params, 2.0, 1e-3,
                                     100, Executor::parallel(4));
  const double du = max_rel_diff(seq.result.u.values(), par.result.u.values());
  const double dc = max_rel_diff(seq.result.centers.centers, par.result.centers.centers);
  const bool same_labels = defuzzify(seq.result.u) == defuzzify(par.result.u);
  return {du <= 1e-6 && dc <= 1e-6 && same_labels,
          "relative diff U " + fmt(du, 3) + ", centers " + fmt(dc, 3) + ", labels " +
              (same_labels ? "identical" : "differ")};
}

Outcome shell_weight_values() {
  const auto w = shell_weights(2, 1.0);
  const bool pinned = std::abs(w[0] - 0.731059) <= 1e-6 && std::abs(w[1] - 0.268941) <= 1e-6;
  Rng rng(505);
  std::uniform_int_distribution<int> dv(1, 10);
  std::uniform_real_distribution<double> dh(0.05, 20.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto ws = shell_weights(dv(rng), dh(rng));
    double sum = 0.0;
    for (double x : ws) sum += x;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return {pinned && worst <= 1e-12,
          "W(2,1) = (" + fmt(w[0], 7) + ", " + fmt(w[1], 7) + "), max |sum - 1| = " + fmt(worst, 3)};
}

Outcome quality() {
  const auto [clean, truth] = generate_phantom({95, 0, kLevels});
  double fcm_total = 0.0, pifcm_total = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Volume noisy = add_gaussian_noise(clean, 7.0, seed);
    PipelineConfig cfg;
    cfg.seed = seed;
    const SegmentationResult f = run_fcm(noisy, cfg);
    const SegmentationResult p = run_3dpifcm(noisy, cfg);
    const LabelVolume t = truth.slice_volume(f.z);
    const std::size_t fi = incorrect_segmentation(f.labels, t);
    const std::size_t pi = incorrect_segmentation(p.labels, t);
    fcm_total += static_cast<double>(fi);
    pifcm_total += static_cast<double>(pi);
    per_seed += " " + std::to_string(fi) + "/" + std::to_string(pi);
  }
  const double fm = fcm_total / 5.0, pm = pifcm_total / 5.0;
  return {pm < fm, "mean incS FCM " + fmt(fm) + " vs 3DPIFCM " + fmt(pm) +
                       " (per seed FCM/3DPIFCM:" + per_seed + ")"};
}

double timed_run(const Volume& v, PipelineConfig cfg) {
  run_3dpifcm(v, cfg);  // warm-up
  std::vector<double> times;
  for (int r = 0; r < 3; ++r) {
    const auto t = Clock::now();
    run_3dpifcm(v, cfg);
    times.push_back(since(t));
  }
  std::sort(times.begin(), times.end());
  return times[1];
}

Outcome speed_trend() {
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::max(4u, cores);
  std::vector<double> speedups;
  std::string detail;
  for (std::size_t size : {95u, 165u, 285u}) {
    const Volume v = add_gaussian_noise(generate_phantom({size, 0, kLevels}).first, 7.0, size);
    PipelineConfig cfg;
    cfg.seed = 7;
    cfg.backend = Backend::sequential;
    const double seq = timed_run(v, cfg);
    cfg.backend = Backend::parallel;
    cfg.workers = workers;
    const double par = timed_run(v, cfg);
    speedups.push_back(seq / par);
    detail += std::to_string(size) + ": " + fmt(seq, 3) + "s/" + fmt(par, 3) + "s = " +
              fmt(seq / par, 3) + "x; ";
  }
  const bool monotone = speedups[1] >= speedups[0] && speedups[2] >= speedups[1];
  const bool fast = speedups[2] > 2.0;
  detail += "workers " + std::to_string(workers) + " on " + std::to_string(cores) +
            " hardware thread(s)";
  if (!monotone) detail += "; speedup not non-decreasing";
  if (!fast) detail += "; speedup at 285 not above 2x";
  return {monotone && fast, detail};
}

std::vector<BenchmarkRecord> sweep_records;

const std::vector<BenchmarkRecord>& desk_sweep() {
  if (!sweep_records.empty()) return sweep_records;
  SweepConfig cfg;
  cfg.sizes = {32, 55, 95, 165, 285};
  cfg.pipeline.workers = std::max(4u, std::thread::hardware_concurrency());
  sweep_records = run_size_sweep(cfg);
  std::ofstream out("acceptance_sweep.csv");
  write_records_csv(out, sweep_records);
  return sweep_records;
}

Outcome fcm_fastest() {
  const TradeoffTable t = summarize(desk_sweep());
  const std::size_t f = t.algorithm_index("fcm");
  bool ok = true;
  std::string detail;
  for (std::size_t s = 0; s < t.sizes.size(); ++s) {
    double others = 1e300;
    for (std::size_t a = 0; a < t.algorithms.size(); ++a) {
      if (a != f) others = std::min(others, t.seconds[a][s]);
    }
    ok = ok && t.seconds[f][s] < others;
    detail += std::to_string(t.sizes[s]) + ": fcm " + fmt(t.seconds[f][s], 3) + "s vs next " +
              fmt(others, 3) + "s; ";
  }
  detail += "records in acceptance_sweep.csv";
  return {ok, detail};
}

Outcome tradeoff() {
  const TradeoffTable t = summarize(desk_sweep());
  const std::string pifcm = "3dpifcm-par";
  const auto alpha = tradeoff_crossover(t, "fcm", pifcm);
  const auto j0 = tradeoff_cost(t, 0.0);
  const auto j1 = tradeoff_cost(t, 1.0);
  const bool fcm_up = j1.at("fcm") > j0.at("fcm");
  const bool pifcm_down = j1.at(pifcm) < j0.at(pifcm);
  bool split = false;
  if (alpha) {
    const auto below = tradeoff_cost(t, *alpha / 2.0);
    const auto above = tradeoff_cost(t, (*alpha + 1.0) / 2.0);
    split = below.at("fcm") < below.at(pifcm) && above.at(pifcm) < above.at("fcm");
  }
  std::ofstream curve("acceptance_tradeoff.csv");
  write_tradeoff_curve(curve, t, 20);
  return {alpha && split && fcm_up && pifcm_down,
          "alpha* = " + (alpha ? fmt(*alpha, 4) : std::string("none")) + "; J_fcm " +
              fmt(j0.at("fcm"), 3) + " -> " + fmt(j1.at("fcm"), 3) + ", J_3dpifcm " +
              fmt(j0.at(pifcm), 3) + " -> " + fmt(j1.at(pifcm), 3)};
}

Outcome amdahl() {
  bool exact = true;
  for (double n : {1.0, 2.0, 3.0, 7.0, 49.0, 3072.0, 20000.0}) {
    exact = exact && amdahl_speedup({0.0, n, 3.0, 0.02}) == 1.0;
  }
  bool limit = true, monotone = true;
  double prev = 0.0;
  for (int n = 1; n <= 20000; ++n) {
    limit = limit && amdahl_speedup({1.0, static_cast<double>(n), 1.0, 1.0}) == n;
    const double s = amdahl_speedup({0.99, static_cast<double>(n), 3.0, 0.02});
    monotone = monotone && s > prev;
    prev = s;
  }
  const std::filesystem::path path = "acceptance_amdahl.csv";
  {
    std::ofstream out(path);
    write_amdahl_csv(out, {0.99, 1.0, 3.0, 0.02}, 1, 20000);
  }
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  const bool csv = lines == 20001;
  return {exact && limit && monotone && csv,
          std::string("S(p=0)=1 ") + (exact ? "exact" : "inexact") + ", S(p=k=j=1)=N " +
              (limit ? "exact" : "inexact") + ", monotone " + (monotone ? "yes" : "no") +
              ", S(3072) = " + fmt(amdahl_speedup({0.99, 3072, 3.0, 0.02}), 5) + ", " +
              std::to_string(lines - 1) + " CSV rows"};
}

Outcome determinism() {
  TempDir dir;
  const auto p = dir.path / "p.raw";
  const auto n = dir.path / "n.raw";
  std::ostringstream sink;
  const auto call = [&](std::vector<std::string> args) {
    if (cli::run(args, sink, sink) != cli::kSuccess) throw std::runtime_error(sink.str());
  };
  call({"phantom", "--size", "95", "--out", p.string()});
  call({"noise", "--in", p.string(), "--dims", "95x95x11", "--sigma", "7", "--seed", "3", "--out",
        n.string()});
  for (const char* tag : {"a", "b"}) {
    call({"segment", "--in", n.string(), "--dims", "95x95x11", "--kind", "f32", "--seed", "11",
          "--out-labels", (dir.path / (std::string(tag) + ".pgm")).string(), "--out-csv",
          (dir.path / (std::string(tag) + ".csv")).string()});
  }
  const bool pgm = read_bytes(dir.path / "a.pgm") == read_bytes(dir.path / "b.pgm");
  const bool csv = read_bytes(dir.path / "a.csv") == read_bytes(dir.path / "b.csv");
  return {pgm && csv, std::string("PGM ") + (pgm ? "identical" : "differs") + ", CSV " +
                          (csv ? "identical" : "differs")};
}

}  // namespace

int main() {
  criterion(1, "row-stochasticity", 60, row_stochasticity);
  criterion(2, "FCM reduction", 60, fcm_reduction);
  criterion(3, "oracle equivalence", 300, oracle);
  criterion(4, "backend equivalence", 120, backend_equivalence);
  criterion(5, "shell weights", 0, shell_weight_values);
  criterion(6, "quality vs FCM", 900, quality);
  criterion(7, "parallel speedup trend", 0, speed_trend);
  criterion(8, "FCM fastest at every size", 0, fcm_fastest);
  criterion(9, "trade-off crossover", 0, tradeoff);
  criterion(10, "Amdahl model", 1, amdahl);
  criterion(11, "segment determinism", 0, determinism);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
