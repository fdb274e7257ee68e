#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pifcm {

enum class Backend { sequential, parallel };

Backend parse_backend(const std::string& text);
const char* to_string(Backend backend);

class ThreadPool;

/// Runs chunked work either inline or on a fixed pool of worker threads.
///
/// Chunk shapes are chosen by the caller and never depend on the worker
/// count, so any reduction that combines per-chunk partials in chunk order
/// produces bit-identical results under every backend.
class Executor {
 public:
  /// Inline execution on the calling thread.
  Executor();
  /// workers == 0 selects std::thread::hardware_concurrency().
  static Executor parallel(unsigned workers = 0);
  static Executor make(Backend backend, unsigned workers = 0);

  Backend backend() const { return pool_ ? Backend::parallel : Backend::sequential; }
  unsigned workers() const;

  /// Calls fn(chunk) for every chunk in [0, chunks); returns when all are done.
  /// The first exception thrown by any chunk is rethrown here.
  void for_each_chunk(std::size_t chunks,
                      const std::function<void(std::size_t)>& fn) const;

 private:
  std::shared_ptr<ThreadPool> pool_;
};

/// Voxels per work chunk for every per-voxel map and reduction.
inline constexpr std::size_t kChunkVoxels = 512;

inline std::size_t chunk_count(std::size_t n) {
  return (n + kChunkVoxels - 1) / kChunkVoxels;
}

/// Combines partials with a fixed-shape pairwise tree: (0+1)+(2+3)...
/// `add(a, b)` must accumulate b into a.
template <typename T, typename Add>
T pairwise_combine(std::vector<T> parts, Add add) {
  if (parts.empty()) return T{};
  for (std::size_t width = 1; width < parts.size(); width *= 2) {
    for (std::size_t i = 0; i + width < parts.size(); i += 2 * width) {
      add(parts[i], parts[i + width]);
    }
  }
  return std::move(parts.front());
}

}  // namespace pifcm
