#include "pifcm/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pifcm {

namespace {

constexpr double kEmptyClusterWeight = 1e-12;
constexpr std::size_t kHistogramBins = 256;
constexpr int kEmIterations = 100;

ClusterSet evenly_spaced(double lo, double hi, int clusters) {
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  ClusterSet out;
  out.centers.resize(static_cast<std::size_t>(clusters));
  for (int j = 0; j < clusters; ++j) {
    out.centers[static_cast<std::size_t>(j)] =
        lo + (hi - lo) * (j + 0.5) / static_cast<double>(clusters);
  }
  return out;
}

bool has_duplicates(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::adjacent_find(values.begin(), values.end()) != values.end();
}

struct Histogram {
  std::vector<double> value;   // mean intensity of the occupied bin
  std::vector<double> weight;  // voxel count
  double total = 0.0;
};

Histogram build_histogram(std::span<const double> slice, double lo, double hi) {
  std::vector<double> count(kHistogramBins, 0.0), sum(kHistogramBins, 0.0);
  const double width = (hi - lo) / static_cast<double>(kHistogramBins);
  for (double x : slice) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    b = std::min(b, kHistogramBins - 1);
    count[b] += 1.0;
    sum[b] += x;
  }
  Histogram h;
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    if (count[b] == 0.0) continue;
    h.value.push_back(sum[b] / count[b]);
    h.weight.push_back(count[b]);
    h.total += count[b];
  }
  return h;
}

// k-quantile starting points: weighted quantiles of the histogram and
// quantiles of the occupied bins. Starts with repeated means are dropped;
// if none survive, a seeded draw of distinct bins is used instead.
std::vector<std::vector<double>> quantile_starts(const Histogram& h, int clusters,
                                                 std::uint64_t seed) {
  const auto c = static_cast<std::size_t>(clusters);
  std::vector<std::vector<double>> starts;

  std::vector<double> means(c);
  std::size_t b = 0;
  double cumulative = h.weight[0];
  for (std::size_t j = 0; j < c; ++j) {
    const double target = (static_cast<double>(j) + 0.5) / static_cast<double>(c) * h.total;
    while (cumulative < target && b + 1 < h.value.size()) cumulative += h.weight[++b];
    means[j] = h.value[b];
  }
  if (!has_duplicates(means)) starts.push_back(means);

  const std::size_t occupied = h.value.size();
  for (std::size_t j = 0; j < c; ++j) {
    const auto idx = static_cast<std::size_t>((static_cast<double>(j) + 0.5) *
                                              static_cast<double>(occupied) /
                                              static_cast<double>(c));
    means[j] = h.value[std::min(idx, occupied - 1)];
  }
  if (!has_duplicates(means) && (starts.empty() || starts.front() != means)) {
    starts.push_back(means);
  }
  if (!starts.empty()) return starts;

  std::vector<std::size_t> order(occupied);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t j = 0; j < c; ++j) means[j] = h.value[order[j]];
  std::sort(means.begin(), means.end());
  starts.push_back(means);
  return starts;
}

// FCM cost (m = 2) of the histogram against the given means.
double histogram_cost(const Histogram& h, const std::vector<double>& mean) {
  std::vector<double> d2(mean.size()), u(mean.size());
  double cost = 0.0;
  for (std::size_t b = 0; b < h.value.size(); ++b) {
    for (std::size_t j = 0; j < mean.size(); ++j) {
      d2[j] = (h.value[b] - mean[j]) * (h.value[b] - mean[j]);
    }
    membership_row(d2, 2.0, u);
    for (std::size_t j = 0; j < mean.size(); ++j) cost += h.weight[b] * u[j] * u[j] * d2[j];
  }
  return cost;
}

std::vector<double> fit_mixture(const Histogram& h, std::vector<double> mean, double range) {
  const std::size_t c = mean.size();
  const double var_floor = 1e-6 * range * range;
  std::vector<double> var(c, std::max(var_floor, std::pow(range / (2.0 * static_cast<double>(c)), 2)));
  std::vector<double> mix(c, 1.0 / static_cast<double>(c));
  std::vector<double> resp(h.value.size() * c);
  std::vector<double> log_p(c);

  for (int iter = 0; iter < kEmIterations; ++iter) {
    // E-step, log-sum-exp per bin.
    for (std::size_t b = 0; b < h.value.size(); ++b) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < c; ++j) {
        const double diff = h.value[b] - mean[j];
        log_p[j] = mix[j] > 0.0 ? std::log(mix[j]) - 0.5 * std::log(var[j]) -
                                      0.5 * diff * diff / var[j]
                                : -std::numeric_limits<double>::infinity();
        best = std::max(best, log_p[j]);
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < c; ++j) norm += std::exp(log_p[j] - best);
      for (std::size_t j = 0; j < c; ++j) {
        resp[b * c + j] = std::exp(log_p[j] - best) / norm;
      }
    }

    // M-step.
    double shift = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double n = 0.0, s = 0.0;
      for (std::size_t b = 0; b < h.value.size(); ++b) {
        const double w = h.weight[b] * resp[b * c + j];
        n += w;
        s += w * h.value[b];
      }
      if (n <= 0.0) {
        mix[j] = 0.0;
        continue;
      }
      const double new_mean = s / n;
      double ss = 0.0;
      for (std::size_t b = 0; b < h.value.size(); ++b) {
        const double diff = h.value[b] - new_mean;
        ss += h.weight[b] * resp[b * c + j] * diff * diff;
      }
      shift = std::max(shift, std::abs(new_mean - mean[j]));
      mean[j] = new_mean;
      var[j] = std::max(var_floor, ss / n);
      mix[j] = n / h.total;
    }
    if (shift < 1e-9 * range) break;
  }
  return mean;
}

}  // namespace

void FcmConfig::validate() const {
  if (clusters < 2) throw std::invalid_argument("cluster count must be >= 2");
  if (!(m > 1.0) || !std::isfinite(m)) throw std::invalid_argument("fuzziness m must be > 1");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

double MembershipMatrix::max_abs_diff(const MembershipMatrix& other) const {
  if (other.rows_ != rows_ || other.clusters_ != clusters_) {
    throw std::invalid_argument("membership matrix shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    worst = std::max(worst, std::abs(values_[k] - other.values_[k]));
  }
  return worst;
}

double MembershipMatrix::max_row_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    worst = std::max(worst, std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0));
  }
  return worst;
}

void membership_row(std::span<const double> dist2, double m, std::span<double> out) {
  const std::size_t c = dist2.size();
  for (std::size_t j = 0; j < c; ++j) {
    if (dist2[j] == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      out[j] = 1.0;
      return;
    }
  }
  // u_j = 1 / sum_k (d2_j / d2_k)^(1/(m-1)), evaluated relative to the
  // smallest distance so no term overflows.
  const double dmin = *std::min_element(dist2.begin(), dist2.end());
  const double exponent = 1.0 / (m - 1.0);
  double total = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    const double ratio = dmin / dist2[j];
    out[j] = exponent == 1.0 ? ratio : std::pow(ratio, exponent);
    total += out[j];
  }
  for (std::size_t j = 0; j < c; ++j) out[j] /= total;
}

double pow_m(double u, double m) { return m == 2.0 ? u * u : std::pow(u, m); }

void CenterPartials::add(const CenterPartials& other) {
  for (std::size_t j = 0; j < weighted.size(); ++j) {
    weighted[j] += other.weighted[j];
    weights[j] += other.weights[j];
  }
  cost += other.cost;
}

CenterPartials combine_partials(std::vector<CenterPartials> parts) {
  return pairwise_combine(std::move(parts),
                          [](CenterPartials& a, const CenterPartials& b) { a.add(b); });
}

ClusterSet centers_from_partials(const CenterPartials& total, const ClusterSet& previous) {
  ClusterSet out;
  out.centers.resize(total.weights.size());
  for (std::size_t j = 0; j < out.centers.size(); ++j) {
    out.centers[j] = total.weights[j] < kEmptyClusterWeight
                         ? previous.centers[j]
                         : total.weighted[j] / total.weights[j];
  }
  return out;
}

ClusterSet init_centers(std::span<const double> slice, int clusters, std::uint64_t seed) {
  if (slice.empty()) throw std::invalid_argument("cannot initialise centers on an empty slice");
  if (clusters < 1) throw std::invalid_argument("cluster count must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(slice.begin(), slice.end());
  const double lo = *lo_it, hi = *hi_it;

  std::vector<double> sorted(slice.begin(), slice.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<int>(
      std::distance(sorted.begin(), std::unique(sorted.begin(), sorted.end())));
  if (distinct < clusters) return evenly_spaced(lo, hi, clusters);

  const Histogram h = build_histogram(slice, lo, hi);
  const auto c = static_cast<std::size_t>(clusters);
  if (h.value.size() < c) return evenly_spaced(lo, hi, clusters);

  const double range = hi - lo;
  // Clipped intensities pile up in a single bin, where a collapsed component
  // has unbounded likelihood; the fits are ranked by FCM cost instead.
  std::vector<double> mean;
  double best_cost = std::numeric_limits<double>::infinity();
  for (auto& start : quantile_starts(h, clusters, seed)) {
    std::vector<double> fit = fit_mixture(h, std::move(start), range);
    const double cost = histogram_cost(h, fit);
    if (cost < best_cost) {
      best_cost = cost;
      mean = std::move(fit);
    }
  }
  std::sort(mean.begin(), mean.end());
  for (std::size_t j = 1; j < c; ++j) {
    if (mean[j] - mean[j - 1] <= 1e-9 * range) return evenly_spaced(lo, hi, clusters);
  }
  return ClusterSet{std::move(mean)};
}

MembershipMatrix fcm_membership(std::span<const double> slice, const ClusterSet& centers,
                                double m) {
  const std::size_t c = centers.size();
  MembershipMatrix u(slice.size(), c);
  std::vector<double> dist2(c);
  for (std::size_t i = 0; i < slice.size(); ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double diff = slice[i] - centers.centers[j];
      dist2[j] = diff * diff;
    }
    membership_row(dist2, m, u.row(i));
  }
  return u;
}

namespace {

CenterPartials fcm_partials(std::span<const double> slice, const MembershipMatrix& u,
                            const ClusterSet& centers, double m) {
  const std::size_t c = centers.size();
  if (u.rows() != slice.size() || u.clusters() != c) {
    throw std::invalid_argument("membership matrix does not match slice/centers");
  }
  std::vector<CenterPartials> parts(chunk_count(slice.size()), CenterPartials(c));
  for (std::size_t chunk = 0; chunk < parts.size(); ++chunk) {
    auto& p = parts[chunk];
    const std::size_t end = std::min(slice.size(), (chunk + 1) * kChunkVoxels);
    for (std::size_t i = chunk * kChunkVoxels; i < end; ++i) {
      const double x = slice[i];
      for (std::size_t j = 0; j < c; ++j) {
        const double um = pow_m(u(i, j), m);
        const double diff = x - centers.centers[j];
        p.weighted[j] += um * x;
        p.weights[j] += um;
        p.cost += um * (diff * diff);
      }
    }
  }
  return combine_partials(std::move(parts));
}

}  // namespace

ClusterSet fcm_centers(std::span<const double> slice, const MembershipMatrix& u, double m,
                       const ClusterSet& previous) {
  return centers_from_partials(fcm_partials(slice, u, previous, m), previous);
}

double fcm_cost(std::span<const double> slice, const MembershipMatrix& u,
                const ClusterSet& centers, double m) {
  return fcm_partials(slice, u, centers, m).cost;
}

FcmResult fcm_run(std::span<const double> slice, const FcmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return fcm_run_from(slice, cfg, init_centers(slice, cfg.clusters, seed));
}

FcmResult fcm_run_from(std::span<const double> slice, const FcmConfig& cfg,
                       ClusterSet centers) {
  cfg.validate();
  if (centers.size() != static_cast<std::size_t>(cfg.clusters)) {
    throw std::invalid_argument("initial center count does not match config");
  }
  FcmResult result;
  MembershipMatrix previous;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    MembershipMatrix u = fcm_membership(slice, centers, cfg.m);
    const CenterPartials totals = fcm_partials(slice, u, centers, cfg.m);
    result.cost_history.push_back(totals.cost);
    centers = centers_from_partials(totals, centers);
    result.iterations = iter;
    const bool converged = iter > 1 && u.max_abs_diff(previous) < cfg.eps;
    previous = std::move(u);
    if (converged) break;
  }
  result.centers = std::move(centers);
  result.u = std::move(previous);
  return result;
}

}  // namespace pifcm
