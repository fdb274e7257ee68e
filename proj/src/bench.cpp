#include "pifcm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pifcm/random.hpp"

namespace pifcm {

namespace {

constexpr int kExhaustiveLabelLimit = 6;

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double minmax_term(double value, double lo, double hi) {
  return hi > lo ? (value - lo) / (hi - lo) : 0.0;
}

}  // namespace

std::size_t incorrect_segmentation(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("label maps differ in size (" + std::to_string(predicted.size()) +
                                " vs " + std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) return 0;
  int labels = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] < 0 || truth[i] < 0) throw std::invalid_argument("labels must be >= 0");
    labels = std::max({labels, predicted[i] + 1, truth[i] + 1});
  }
  const auto k = static_cast<std::size_t>(labels);
  std::vector<std::size_t> confusion(k * k, 0);  // [predicted][truth]
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++confusion[static_cast<std::size_t>(predicted[i]) * k + static_cast<std::size_t>(truth[i])];
  }

  std::size_t best_agree = 0;
  if (labels <= kExhaustiveLabelLimit) {
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::size_t agree = 0;
      for (std::size_t p = 0; p < k; ++p) agree += confusion[p * k + perm[p]];
      best_agree = std::max(best_agree, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    // Greedy: repeatedly take the largest remaining confusion cell.
    std::vector<bool> used_p(k, false), used_t(k, false);
    for (std::size_t round = 0; round < k; ++round) {
      std::size_t bp = 0, bt = 0, bv = 0;
      bool found = false;
      for (std::size_t p = 0; p < k; ++p) {
        if (used_p[p]) continue;
        for (std::size_t t = 0; t < k; ++t) {
          if (used_t[t]) continue;
          if (!found || confusion[p * k + t] > bv) {
            bp = p, bt = t, bv = confusion[p * k + t];
            found = true;
          }
        }
      }
      used_p[bp] = used_t[bt] = true;
      best_agree += bv;
    }
  }
  return truth.size() - best_agree;
}

std::size_t incorrect_segmentation(const LabelVolume& predicted, const LabelVolume& truth) {
  if (!(predicted.dims == truth.dims)) {
    throw std::invalid_argument("label volumes differ in dims (" + to_string(predicted.dims) +
                                " vs " + to_string(truth.dims) + ")");
  }
  return incorrect_segmentation(std::span<const int>(predicted.labels),
                                std::span<const int>(truth.labels));
}

void write_records_csv(std::ostream& out, std::span<const BenchmarkRecord> records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.algorithm << ',' << r.image_size << ',' << format6(r.noise_pct) << ',' << r.seed
        << ',' << format6(r.seconds) << ',' << r.incS << '\n';
  }
}

void write_records_csv(const std::filesystem::path& path,
                       std::span<const BenchmarkRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_records_csv(out, records);
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<BenchmarkRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordCsvHeader) {
    throw IoError("benchmark CSV must start with header '" + std::string(kRecordCsvHeader) + "'");
  }
  std::vector<BenchmarkRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 6) {
      throw IoError("benchmark CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    try {
      BenchmarkRecord r;
      r.algorithm = fields[0];
      r.image_size = std::stoull(fields[1]);
      r.noise_pct = std::stod(fields[2]);
      r.seed = std::stoull(fields[3]);
      r.seconds = std::stod(fields[4]);
      r.incS = std::stoull(fields[5]);
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError("benchmark CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return records;
}

std::vector<BenchmarkRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_records_csv(in);
}

std::size_t TradeoffTable::algorithm_index(const std::string& name) const {
  const auto it = std::find(algorithms.begin(), algorithms.end(), name);
  if (it == algorithms.end()) throw std::invalid_argument("no records for algorithm " + name);
  return static_cast<std::size_t>(it - algorithms.begin());
}

TradeoffTable summarize(std::span<const BenchmarkRecord> records) {
  TradeoffTable t;
  std::set<std::size_t> sizes;
  for (const auto& r : records) {
    sizes.insert(r.image_size);
    if (std::find(t.algorithms.begin(), t.algorithms.end(), r.algorithm) == t.algorithms.end()) {
      t.algorithms.push_back(r.algorithm);
    }
  }
  t.sizes.assign(sizes.begin(), sizes.end());
  const std::size_t na = t.algorithms.size(), ns = t.sizes.size();
  t.incS.assign(na, std::vector<double>(ns, 0.0));
  t.seconds.assign(na, std::vector<double>(ns, 0.0));
  std::vector<std::vector<double>> count(na, std::vector<double>(ns, 0.0));
  for (const auto& r : records) {
    const std::size_t a = t.algorithm_index(r.algorithm);
    const auto s = static_cast<std::size_t>(
        std::lower_bound(t.sizes.begin(), t.sizes.end(), r.image_size) - t.sizes.begin());
    t.incS[a][s] += static_cast<double>(r.incS);
    t.seconds[a][s] += r.seconds;
    count[a][s] += 1.0;
  }
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (count[a][s] == 0.0) {
        throw std::invalid_argument("algorithm " + t.algorithms[a] + " has no records at size " +
                                    std::to_string(t.sizes[s]));
      }
      t.incS[a][s] /= count[a][s];
      t.seconds[a][s] /= count[a][s];
    }
  }
  return t;
}

std::map<std::string, double> tradeoff_cost(const TradeoffTable& t, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  std::map<std::string, double> out;
  const std::size_t na = t.algorithms.size(), ns = t.sizes.size();
  if (ns == 0) return out;
  for (std::size_t a = 0; a < na; ++a) out[t.algorithms[a]] = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    double q_lo = t.incS[0][s], q_hi = q_lo, s_lo = t.seconds[0][s], s_hi = s_lo;
    for (std::size_t a = 1; a < na; ++a) {
      q_lo = std::min(q_lo, t.incS[a][s]);
      q_hi = std::max(q_hi, t.incS[a][s]);
      s_lo = std::min(s_lo, t.seconds[a][s]);
      s_hi = std::max(s_hi, t.seconds[a][s]);
    }
    for (std::size_t a = 0; a < na; ++a) {
      out[t.algorithms[a]] += alpha * minmax_term(t.incS[a][s], q_lo, q_hi) +
                              (1.0 - alpha) * minmax_term(t.seconds[a][s], s_lo, s_hi);
    }
  }
  for (auto& [name, j] : out) j /= static_cast<double>(ns);
  return out;
}

std::map<std::string, double> tradeoff_cost(std::span<const BenchmarkRecord> records,
                                            double alpha) {
  return tradeoff_cost(summarize(records), alpha);
}

std::optional<double> tradeoff_crossover(const TradeoffTable& table, const std::string& a,
                                         const std::string& b) {
  // J is affine in alpha: J(alpha) = J(0) + alpha * (J(1) - J(0)).
  const auto j0 = tradeoff_cost(table, 0.0);
  const auto j1 = tradeoff_cost(table, 1.0);
  const double d0 = j0.at(a) - j0.at(b);
  const double d1 = j1.at(a) - j1.at(b);
  if (d0 == d1) return d0 == 0.0 ? std::optional<double>(0.0) : std::nullopt;
  const double alpha = d0 / (d0 - d1);
  if (alpha < 0.0 || alpha > 1.0) return std::nullopt;
  return alpha;
}

void write_tradeoff_curve(std::ostream& out, const TradeoffTable& table, int steps) {
  if (steps < 1) throw std::invalid_argument("curve needs at least one step");
  out << "alpha";
  for (const auto& a : table.algorithms) out << ',' << a;
  out << '\n';
  for (int s = 0; s <= steps; ++s) {
    const double alpha = static_cast<double>(s) / steps;
    const auto j = tradeoff_cost(table, alpha);
    out << format6(alpha);
    for (const auto& a : table.algorithms) out << ',' << format6(j.at(a));
    out << '\n';
  }
}

void AmdahlParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("parallel fraction p must lie in [0,1]");
  if (!(n >= 1.0)) throw std::invalid_argument("processor count N must be >= 1");
  if (!(k > 0.0)) throw std::invalid_argument("clock ratio k must be > 0");
  if (!(j > 0.0)) throw std::invalid_argument("transfer ratio j must be > 0");
}

double amdahl_speedup(const AmdahlParams& params) {
  params.validate();
  // Multiplied through by jN so the p = 0 and p = k = j = 1 limits come out exact.
  const double jn = params.j * params.n;
  return jn / (jn * (1.0 - params.p) + params.k * params.p);
}

void write_amdahl_csv(std::ostream& out, AmdahlParams params, std::size_t first,
                      std::size_t last, std::size_t step) {
  if (first < 1 || last < first || step < 1) {
    throw std::invalid_argument("N range must satisfy 1 <= first <= last, step >= 1");
  }
  out << "N,speedup\n";
  for (std::size_t n = first; n <= last; n += step) {
    params.n = static_cast<double>(n);
    out << n << ',' << format6(amdahl_speedup(params)) << '\n';
  }
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : all_algorithms()) {
    if (name == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (fcm|ifcmpso2d|3dpifcm-seq|3dpifcm-par)");
}

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::fcm: return "fcm";
    case Algorithm::ifcmpso_2d: return "ifcmpso2d";
    case Algorithm::pifcm_seq: return "3dpifcm-seq";
    case Algorithm::pifcm_par: return "3dpifcm-par";
  }
  return "?";
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::fcm, Algorithm::ifcmpso_2d, Algorithm::pifcm_seq, Algorithm::pifcm_par};
}

std::vector<std::size_t> default_sweep_sizes() { return {32, 55, 95, 165, 285, 493, 854}; }

std::vector<double> default_noise_levels() { return {3.0, 5.0, 7.0, 9.0}; }

SegmentationResult run_algorithm(Algorithm algorithm, const Volume& volume,
                                 const SweepConfig& cfg, std::uint64_t seed) {
  PipelineConfig p = cfg.pipeline;
  p.seed = seed;
  switch (algorithm) {
    case Algorithm::fcm:
      return run_fcm(volume, p);
    case Algorithm::ifcmpso_2d:
      p.spec.mode = NeighborhoodMode::planar;
      p.spec.depth = 1;
      p.backend = Backend::sequential;
      return run_3dpifcm(volume, p);
    case Algorithm::pifcm_seq:
    case Algorithm::pifcm_par:
      p.spec.mode = NeighborhoodMode::volumetric;
      p.spec.depth = cfg.volumetric_depth;
      p.backend = algorithm == Algorithm::pifcm_seq ? Backend::sequential : Backend::parallel;
      return run_3dpifcm(volume, p);
  }
  throw std::logic_error("unhandled algorithm");
}

std::vector<BenchmarkRecord> run_size_sweep(const SweepConfig& cfg, const SweepProgress& progress) {
  if (cfg.repeats < 1 || cfg.warmup < 0) {
    throw std::invalid_argument("sweep needs repeats >= 1 and warmup >= 0");
  }
  std::vector<BenchmarkRecord> records;
  for (std::size_t size : cfg.sizes) {
    PhantomSpec spec;
    spec.size = size;
    const auto [phantom, truth] = generate_phantom(spec);
    const std::size_t z = cfg.pipeline.target_slice(phantom.dims);
    const LabelVolume truth_slice = truth.slice_volume(z);
    for (double noise : cfg.noise_pcts) {
      for (std::uint64_t seed : cfg.seeds) {
        const std::uint64_t noise_seed =
            derive_seed(seed, size * 1000 + static_cast<std::uint64_t>(std::lround(noise * 10.0)));
        const Volume noisy = add_gaussian_noise(phantom, noise, noise_seed);
        for (Algorithm algorithm : cfg.algorithms) {
          for (int w = 0; w < cfg.warmup; ++w) run_algorithm(algorithm, noisy, cfg, seed);
          std::vector<double> times;
          SegmentationResult last;
          for (int r = 0; r < cfg.repeats; ++r) {
            const auto start = std::chrono::steady_clock::now();
            last = run_algorithm(algorithm, noisy, cfg, seed);
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count());
          }
          BenchmarkRecord rec{to_string(algorithm), size,
                              noise,                seed,
                              std::max(median(times), 1e-9),
                              incorrect_segmentation(last.labels, truth_slice)};
          if (progress) progress(rec);
          records.push_back(std::move(rec));
        }
      }
    }
  }
  return records;
}

}  // namespace pifcm
