#include "pifcm/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pifcm/bench.hpp"
#include "pifcm/pipeline.hpp"
#include "pifcm/volume.hpp"

namespace pifcm::cli {

namespace {

std::string fmt_double(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct NRange {
  std::size_t first = 1, last = 20000, step = 1;
};

NRange parse_n_range(const std::string& text) {
  NRange r;
  std::vector<std::size_t> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) {
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad --n-range '" + text + "'");
    parts.push_back(v);
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw std::invalid_argument("--n-range must be FIRST:LAST or FIRST:LAST:STEP");
  }
  r.first = parts[0];
  r.last = parts[1];
  if (parts.size() == 3) r.step = parts[2];
  return r;
}

struct PhantomArgs {
  std::size_t size = 32;
  std::size_t depth = 0;
  std::vector<double> levels;
  std::string out, truth_out, pgm;
};

struct NoiseArgs {
  std::string in, dims, kind = "u8", out, out_kind = "f32";
  double sigma = 5.0;
  std::uint64_t seed = 0;
};

struct SegmentArgs {
  std::string in, dims, kind = "u8", mode = "3d", backend = "parallel", search = "simplex";
  std::optional<std::size_t> z;
  int c = 4, v = 2, particles = 10, pso_iters = 30, max_iter = 100;
  double m = 2.0, h = 1.0, eps = 1e-3;
  std::optional<double> lambda, xi;
  unsigned workers = 0;
  std::uint64_t seed = 0;
  std::string out_labels, out_csv, out_timings, truth;
};

struct BenchArgs {
  std::vector<std::size_t> sizes = default_sweep_sizes();
  std::vector<std::string> algs{"fcm", "ifcmpso2d", "3dpifcm-seq", "3dpifcm-par"};
  std::vector<double> noise = default_noise_levels();
  std::vector<std::uint64_t> seeds{1};
  std::string out, curve_out;
  int repeats = 3, warmup = 1, particles = 10, pso_iters = 30, v = 2;
  unsigned workers = 0;
  double alpha = 0.7;
};

struct AmdahlArgs {
  double p = 0.99, k = 3.0, j = 0.02;
  std::string n_range = "1:20000";
  std::string out;
};

void cmd_phantom(const PhantomArgs& a, std::ostream& out) {
  PhantomSpec spec;
  spec.size = a.size;
  spec.depth = a.depth;
  if (!a.levels.empty()) spec.levels = a.levels;
  const auto [volume, truth] = generate_phantom(spec);
  write_raw(volume, a.out, SampleKind::u8);
  if (!a.truth_out.empty()) write_raw_labels(truth, a.truth_out);
  if (!a.pgm.empty()) export_slice_pgm(volume, volume.dims.nz / 2, a.pgm);
  out << "phantom " << to_string(volume.dims) << " (" << spec.levels.size()
      << " regions) -> " << a.out << '\n';
}

void cmd_noise(const NoiseArgs& a, std::ostream& out) {
  const Volume in = normalize_minmax(load_raw(a.in, parse_dims(a.dims), parse_sample_kind(a.kind)));
  const Volume noisy = add_gaussian_noise(in, a.sigma, a.seed);
  write_raw(noisy, a.out, parse_sample_kind(a.out_kind));
  out << "added " << fmt_double(a.sigma, 6) << "% gaussian noise (seed " << a.seed << ") -> "
      << a.out << '\n';
}

void cmd_segment(const SegmentArgs& a, std::ostream& out) {
  const Dims dims = parse_dims(a.dims);
  const Volume volume = load_raw(a.in, dims, parse_sample_kind(a.kind));

  PipelineConfig cfg;
  cfg.clusters = a.c;
  cfg.m = a.m;
  cfg.eps = a.eps;
  cfg.z = a.z;
  cfg.spec = NeighborhoodSpec{a.v, a.h, parse_mode(a.mode)};
  cfg.swarm.particles = a.particles;
  cfg.swarm.max_iter = a.pso_iters;
  cfg.swarm.domain = parse_search_domain(a.search);
  cfg.backend = parse_backend(a.backend);
  cfg.workers = a.workers;
  cfg.seed = a.seed;
  cfg.final_max_iter = a.max_iter;
  if (a.lambda || a.xi) cfg.fixed_params = AttractionParams{a.lambda.value_or(0.0), a.xi.value_or(0.0)};

  const SegmentationResult r = run_3dpifcm(volume, cfg);

  std::optional<std::size_t> incs;
  if (!a.truth.empty()) {
    const Volume t = load_raw(a.truth, dims, SampleKind::u8);
    LabelVolume truth{{dims.nx, dims.ny, 1}, {}, cfg.clusters};
    for (double v : t.slice(r.z)) truth.labels.push_back(static_cast<int>(v));
    incs = incorrect_segmentation(r.labels, truth);
  }

  if (!a.out_labels.empty()) export_slice_pgm(r.labels, 0, a.out_labels);
  if (!a.out_csv.empty()) {
    std::ofstream csv(a.out_csv);
    if (!csv) throw IoError("cannot write " + a.out_csv);
    csv << "z,clusters,m,mode,v,h,backend,lambda,xi,cost,init_iterations,swarm_iterations,"
           "swarm_evaluations,final_iterations,centers,incS\n";
    std::string centers;
    for (std::size_t j = 0; j < r.centers.size(); ++j) {
      centers += (j ? ";" : "") + fmt_double(r.centers.centers[j]);
    }
    csv << r.z << ',' << cfg.clusters << ',' << fmt_double(cfg.m) << ',' << a.mode << ','
        << a.v << ',' << fmt_double(a.h) << ',' << to_string(cfg.backend) << ','
        << fmt_double(r.lambda_star) << ',' << fmt_double(r.xi_star) << ','
        << fmt_double(r.cost) << ',' << r.init_iterations << ',' << r.swarm_iterations << ','
        << r.swarm_evaluations << ',' << r.final_iterations << ',' << centers << ','
        << (incs ? std::to_string(*incs) : "") << '\n';
  }
  if (!a.out_timings.empty()) {
    std::ofstream csv(a.out_timings);
    if (!csv) throw IoError("cannot write " + a.out_timings);
    const auto& t = r.timings;
    csv << "normalize,cache,init,swarm,final,defuzzify,total\n"
        << fmt_double(t.normalize, 6) << ',' << fmt_double(t.cache, 6) << ','
        << fmt_double(t.init, 6) << ',' << fmt_double(t.swarm, 6) << ','
        << fmt_double(t.final_run, 6) << ',' << fmt_double(t.defuzzify, 6) << ','
        << fmt_double(t.total, 6) << '\n';
  }

  out << "slice " << r.z << ": lambda*=" << fmt_double(r.lambda_star, 6)
      << " xi*=" << fmt_double(r.xi_star, 6) << " iterations(init/swarm/final)="
      << r.init_iterations << '/' << r.swarm_iterations << '/' << r.final_iterations
      << " seconds=" << fmt_double(r.timings.total, 4);
  if (incs) out << " incS=" << *incs;
  out << '\n';
}

void cmd_bench(const BenchArgs& a, std::ostream& out) {
  SweepConfig cfg;
  cfg.sizes = a.sizes;
  cfg.algorithms.clear();
  for (const auto& name : a.algs) cfg.algorithms.push_back(parse_algorithm(name));
  cfg.noise_pcts = a.noise;
  cfg.seeds = a.seeds;
  cfg.repeats = a.repeats;
  cfg.warmup = a.warmup;
  cfg.pipeline.swarm.particles = a.particles;
  cfg.pipeline.swarm.max_iter = a.pso_iters;
  cfg.pipeline.workers = a.workers;
  cfg.volumetric_depth = a.v;

  const auto records = run_size_sweep(cfg, [&out](const BenchmarkRecord& r) {
    out << r.algorithm << " size=" << r.image_size << " noise=" << fmt_double(r.noise_pct, 3)
        << "% seed=" << r.seed << " seconds=" << fmt_double(r.seconds, 4) << " incS=" << r.incS
        << '\n';
  });
  write_records_csv(std::filesystem::path(a.out), records);

  if (cfg.algorithms.size() >= 2) {
    const TradeoffTable table = summarize(records);
    out << "J(" << fmt_double(a.alpha, 3) << "):";
    for (const auto& [name, j] : tradeoff_cost(table, a.alpha)) {
      out << ' ' << name << '=' << fmt_double(j, 4);
    }
    out << '\n';
    for (const char* pifcm : {"3dpifcm-par", "3dpifcm-seq"}) {
      if (std::find(table.algorithms.begin(), table.algorithms.end(), pifcm) ==
              table.algorithms.end() ||
          std::find(table.algorithms.begin(), table.algorithms.end(), "fcm") ==
              table.algorithms.end()) {
        continue;
      }
      const auto alpha = tradeoff_crossover(table, "fcm", pifcm);
      out << "crossover fcm/" << pifcm << ": "
          << (alpha ? fmt_double(*alpha, 4) : std::string("none")) << '\n';
      break;
    }
    if (!a.curve_out.empty()) {
      std::ofstream curve(a.curve_out);
      if (!curve) throw IoError("cannot write " + a.curve_out);
      write_tradeoff_curve(curve, table, 20);
    }
  }
  out << "wrote " << records.size() << " records to " << a.out << '\n';
}

void cmd_amdahl(const AmdahlArgs& a, std::ostream& out) {
  const NRange r = parse_n_range(a.n_range);
  AmdahlParams params{a.p, 1.0, a.k, a.j};
  params.validate();
  if (a.out.empty()) {
    write_amdahl_csv(out, params, r.first, r.last, r.step);
    return;
  }
  std::ofstream file(a.out);
  if (!file) throw IoError("cannot write " + a.out);
  write_amdahl_csv(file, params, r.first, r.last, r.step);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fuzzy clustering segmentation of noisy 3D volumes", "pifcm"};
  app.require_subcommand(1);

  PhantomArgs phantom;
  auto* sp = app.add_subcommand("phantom", "Generate a nested-cuboid phantom (u8 raw)");
  sp->add_option("--size", phantom.size, "Side length in voxels")->check(CLI::PositiveNumber);
  sp->add_option("--depth", phantom.depth, "Slice count (default max(3, size/8))");
  sp->add_option("--levels", phantom.levels, "Region gray levels in [0,1], outermost first")
      ->delimiter(',');
  sp->add_option("--out", phantom.out, "Output raw volume")->required();
  sp->add_option("--truth-out", phantom.truth_out, "Output raw u8 ground-truth labels");
  sp->add_option("--pgm", phantom.pgm, "Also write the middle slice as PGM");

  NoiseArgs noise;
  auto* sn = app.add_subcommand("noise", "Normalise a raw volume and add Gaussian noise");
  sn->add_option("--in", noise.in)->required();
  sn->add_option("--dims", noise.dims, "NXxNYxNZ")->required();
  sn->add_option("--kind", noise.kind, "u8|u16le|f32le");
  sn->add_option("--sigma", noise.sigma, "Noise standard deviation in percent");
  sn->add_option("--seed", noise.seed);
  sn->add_option("--out", noise.out)->required();
  sn->add_option("--out-kind", noise.out_kind, "u8|u16le|f32le");

  SegmentArgs seg;
  auto* ss = app.add_subcommand("segment", "Segment one slice with PSO-tuned IFCM");
  ss->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  ss->add_option("--in", seg.in)->required();
  ss->add_option("--dims", seg.dims, "NXxNYxNZ")->required();
  ss->add_option("--kind", seg.kind, "u8|u16le|f32le");
  ss->add_option("--z", seg.z, "Target slice (default nz/2)");
  ss->add_option("--c", seg.c, "Cluster count");
  ss->add_option("--m", seg.m, "Fuzziness");
  ss->add_option("--eps", seg.eps, "Convergence threshold on max |dU|");
  ss->add_option("--v", seg.v, "Shell depth");
  ss->add_option("--h", seg.h, "Shell weight decay");
  ss->add_option("--mode", seg.mode, "2d|3d");
  ss->add_option("--lambda", seg.lambda, "Fixed feature attraction (skips PSO)");
  ss->add_option("--xi", seg.xi, "Fixed neighbourhood attraction (skips PSO)");
  ss->add_option("--backend", seg.backend, "sequential|parallel");
  ss->add_option("--workers", seg.workers, "Parallel workers (0 = all cores)");
  ss->add_option("--seed", seg.seed);
  ss->add_option("--particles", seg.particles, "Swarm size");
  ss->add_option("--pso-iters", seg.pso_iters, "Swarm iteration cap");
  ss->add_option("--search", seg.search, "Swarm domain: simplex|square");
  ss->add_option("--max-iter", seg.max_iter, "Final IFCM iteration cap");
  ss->add_option("--truth", seg.truth, "Raw u8 ground-truth labels for incS");
  ss->add_option("--out-labels", seg.out_labels, "Label slice PGM");
  ss->add_option("--out-csv", seg.out_csv, "Parameters/iterations CSV");
  ss->add_option("--out-timings", seg.out_timings, "Per-phase timing CSV");

  BenchArgs bench;
  auto* sb = app.add_subcommand("bench", "Phantom size sweep; writes benchmark CSV");
  sb->add_option("--sizes", bench.sizes)->delimiter(',');
  sb->add_option("--algs", bench.algs, "fcm,ifcmpso2d,3dpifcm-seq,3dpifcm-par")->delimiter(',');
  sb->add_option("--noise", bench.noise, "Noise levels in percent")->delimiter(',');
  sb->add_option("--seeds", bench.seeds)->delimiter(',');
  sb->add_option("--repeats", bench.repeats, "Timed runs per cell (median reported)");
  sb->add_option("--warmup", bench.warmup, "Untimed runs per cell");
  sb->add_option("--particles", bench.particles);
  sb->add_option("--pso-iters", bench.pso_iters);
  sb->add_option("--v", bench.v, "Shell depth for the 3D algorithms");
  sb->add_option("--workers", bench.workers);
  sb->add_option("--alpha", bench.alpha, "Trade-off weight reported on stdout");
  sb->add_option("--curve-out", bench.curve_out, "J(alpha) curve CSV");
  sb->add_option("--out", bench.out)->required();

  AmdahlArgs amdahl;
  auto* sa = app.add_subcommand("amdahl", "Modified Amdahl speedup curve as CSV");
  sa->add_option("--p", amdahl.p, "Parallel fraction");
  sa->add_option("--k", amdahl.k, "CPU/GPU clock ratio");
  sa->add_option("--j", amdahl.j, "Data-transfer ratio");
  sa->add_option("--n-range", amdahl.n_range, "FIRST:LAST[:STEP]");
  sa->add_option("--out", amdahl.out, "Output CSV (default stdout)");

  std::vector<std::string> argv_storage{"pifcm"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kSuccess;
    }
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (*sp) cmd_phantom(phantom, out);
    if (*sn) cmd_noise(noise, out);
    if (*ss) cmd_segment(seg, out);
    if (*sb) cmd_bench(bench, out);
    if (*sa) cmd_amdahl(amdahl, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kSuccess;
}

}  // namespace pifcm::cli
