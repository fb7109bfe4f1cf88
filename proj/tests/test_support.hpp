#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/grid.hpp"
#include "gridwatch/rng.hpp"

namespace gwtest {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gridwatch_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// A grid of `plant_count` gas plants (p1, p2, ...) and `load_count` load
/// buses (l1, l2, ...), all plants rated `rated` MW.
inline gridwatch::GridSpec tiny_grid(int plant_count, int load_count, double rated = 100.0) {
  gridwatch::GridSpec grid;
  grid.name = "fixture";
  for (int i = 1; i <= load_count; ++i) grid.load_bus_ids.push_back("l" + std::to_string(i));
  for (int i = 1; i <= plant_count; ++i) {
    gridwatch::Plant p;
    p.id = "p" + std::to_string(i);
    p.kind = gridwatch::PlantKind::gas;
    p.rated_power = rated;
    p.annual_energy = rated * 8736.0 * 0.4;
    p.bus_id = "b" + std::to_string(i);
    grid.plants.push_back(p);
  }
  return grid;
}

/// Uniform random frame over [lo, hi] matching the grid's column layout.
inline gridwatch::SeriesFrame random_frame(const gridwatch::GridSpec& grid, std::int64_t rows,
                                           std::uint64_t seed, double lo = 10.0,
                                           double hi = 90.0) {
  gridwatch::SeriesFrame frame;
  frame.columns = grid.column_ids();
  frame.values.resize(rows, static_cast<Eigen::Index>(frame.columns.size()));
  gridwatch::Rng rng(seed);
  for (Eigen::Index c = 0; c < frame.values.cols(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      frame.values(r, c) = lo + (hi - lo) * rng.uniform();
    }
  }
  return frame;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  gridwatch::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace gwtest
