#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "support/oracles.hpp"

namespace support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(AAG_SOURCE_DIR); }
inline fs::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "aag") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

using Rng = std::mt19937_64;

inline std::uint32_t uniform(Rng& rng, std::uint32_t lo, std::uint32_t hi) {
  return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

struct RandomDigraph {
  std::uint32_t n = 0;
  std::vector<oracle::Edge> edges;
};

/// Erdos-Renyi style digraph with optional self loops and parallel edges.
/// Weights are drawn from a small set so ties and duplicates occur.
inline RandomDigraph random_digraph(Rng& rng, std::uint32_t n, double p, bool self_loops, bool parallel) {
  RandomDigraph g{n, {}};
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v = 0; v < n; ++v) {
      if (u == v && !self_loops) continue;
      if (!coin(rng, p)) continue;
      int copies = parallel && coin(rng, 0.2) ? 2 : 1;
      for (int c = 0; c < copies; ++c) g.edges.push_back({u, v, static_cast<double>(uniform(rng, 1, 5)) * 10.0});
    }
  std::shuffle(g.edges.begin(), g.edges.end(), rng);
  return g;
}

}  // namespace support
