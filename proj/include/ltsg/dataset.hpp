#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltsg/simulation.hpp"

namespace ltsg {

/// One per-step dataset row (raw ECI states).
struct DatasetRow {
  int traj_id = 0;
  int step = 0;
  double t = 0.0;
  StateVector chief;
  StateVector deputy;
  double rel_distance = 0.0;
  double t_back = 0.0;
};

struct DatasetSplit {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// Trajectory-level 60/20/20 split of ids 0..n-1 after a seeded shuffle.
DatasetSplit split_trajectories(int n, std::uint64_t seed);

struct Dataset {
  std::vector<DatasetRow> rows;
  DatasetSplit split;
  std::uint64_t seed = 0;
  int draws = 0;
  std::string scenario;
  double phase_threshold_km = 1.0;

  /// Most negative t_back over the given trajectories (all when empty).
  double t_min(const std::vector<int>& ids = {}) const;
  std::vector<DatasetRow> trajectory(int id) const;
  nlohmann::json manifest() const;
};

inline constexpr const char* kDatasetRowsFile = "rows.csv";
inline constexpr const char* kDatasetManifestFile = "manifest.json";

/// Runs n_traj tsg-mode missions from filtered random initial states
/// (cfg.mc.rng_seed) and splits them by trajectory.
Dataset generate_dataset(const MissionContext& ctx, int n_traj, int jobs = 1);

void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace ltsg
