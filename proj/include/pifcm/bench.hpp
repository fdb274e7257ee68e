#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pifcm/pipeline.hpp"
#include "pifcm/volume.hpp"

namespace pifcm {

// ---------------------------------------------------------------------------
// Segmentation quality
// ---------------------------------------------------------------------------

/// Voxels whose predicted label disagrees with the truth after the label
/// permutation that minimises disagreements. Exhaustive over permutations
/// for up to 6 labels, greedy on the confusion matrix above that.
std::size_t incorrect_segmentation(std::span<const int> predicted, std::span<const int> truth);
std::size_t incorrect_segmentation(const LabelVolume& predicted, const LabelVolume& truth);

// ---------------------------------------------------------------------------
// Benchmark records and CSV
// ---------------------------------------------------------------------------

struct BenchmarkRecord {
  std::string algorithm;
  std::size_t image_size = 0;
  double noise_pct = 0.0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::size_t incS = 0;

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

inline constexpr const char* kRecordCsvHeader = "algorithm,size,noise_pct,seed,seconds,incS";

/// Floating-point fields are written with 6 significant digits.
void write_records_csv(std::ostream& out, std::span<const BenchmarkRecord> records);
void write_records_csv(const std::filesystem::path& path, std::span<const BenchmarkRecord> records);
std::vector<BenchmarkRecord> read_records_csv(std::istream& in);
std::vector<BenchmarkRecord> read_records_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Quality / speed trade-off
// ---------------------------------------------------------------------------

/// Mean incS and seconds per algorithm and image size.
struct TradeoffTable {
  std::vector<std::string> algorithms;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> incS;     // [algorithm][size]
  std::vector<std::vector<double>> seconds;  // [algorithm][size]

  std::size_t algorithm_index(const std::string& name) const;
};

/// Averages records over noise levels and seeds. Every algorithm must have
/// records at every size.
TradeoffTable summarize(std::span<const BenchmarkRecord> records);

/// J(alpha) = 1/k sum_sizes [alpha * norm(incS) + (1 - alpha) * norm(S)], with
/// min-max normalisation across algorithms at each size. A term whose
/// min == max contributes 0.
std::map<std::string, double> tradeoff_cost(const TradeoffTable& table, double alpha);
std::map<std::string, double> tradeoff_cost(std::span<const BenchmarkRecord> records, double alpha);

/// The alpha in [0,1] where J_a(alpha) == J_b(alpha), if the lines cross.
std::optional<double> tradeoff_crossover(const TradeoffTable& table, const std::string& a,
                                         const std::string& b);

/// Columns: alpha followed by one J column per algorithm.
void write_tradeoff_curve(std::ostream& out, const TradeoffTable& table, int steps);

// ---------------------------------------------------------------------------
// Modified Amdahl model
// ---------------------------------------------------------------------------

struct AmdahlParams {
  double p = 0.99;   // parallel fraction of the run time
  double n = 1.0;    // processor count
  double k = 3.0;    // CPU / GPU clock ratio
  double j = 0.02;   // data-transfer ratio

  void validate() const;
};

/// 1 / ((1 - p) + k p / (j N))
double amdahl_speedup(const AmdahlParams& params);

/// "N,speedup" rows for N = first, first + step, ... <= last.
void write_amdahl_csv(std::ostream& out, AmdahlParams params, std::size_t first,
                      std::size_t last, std::size_t step = 1);

// ---------------------------------------------------------------------------
// Size sweep
// ---------------------------------------------------------------------------

enum class Algorithm { fcm, ifcmpso_2d, pifcm_seq, pifcm_par };

Algorithm parse_algorithm(const std::string& name);
const char* to_string(Algorithm algorithm);
std::vector<Algorithm> all_algorithms();

std::vector<std::size_t> default_sweep_sizes();
std::vector<double> default_noise_levels();

struct SweepConfig {
  std::vector<std::size_t> sizes = default_sweep_sizes();
  std::vector<Algorithm> algorithms = all_algorithms();
  std::vector<double> noise_pcts = default_noise_levels();
  std::vector<std::uint64_t> seeds{1};
  int warmup = 1;
  int repeats = 3;
  /// Shared segmentation settings. Neighbourhood mode, depth and backend
  /// are overridden per algorithm.
  PipelineConfig pipeline;
  int volumetric_depth = 2;
};

/// Runs one configured algorithm on a volume and returns its result.
SegmentationResult run_algorithm(Algorithm algorithm, const Volume& volume,
                                 const SweepConfig& cfg, std::uint64_t seed);

using SweepProgress = std::function<void(const BenchmarkRecord&)>;

/// For each size, noise level and seed: build the phantom, add noise, then
/// time every algorithm (median of `repeats` runs after `warmup` runs) and
/// score it against the phantom truth. Cells run one at a time.
std::vector<BenchmarkRecord> run_size_sweep(const SweepConfig& cfg,
                                            const SweepProgress& progress = {});

}  // namespace pifcm
