#include "ltsg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "ltsg/errors.hpp"

namespace ltsg {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetSplit split_trajectories(int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("dataset needs at least one trajectory");
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const int n_train = static_cast<int>(std::lround(0.6 * n));
  const int n_val = std::min(n - n_train, static_cast<int>(std::lround(0.2 * n)));
  DatasetSplit s;
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  s.test.assign(ids.begin() + n_train + n_val, ids.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

double Dataset::t_min(const std::vector<int>& ids) const {
  double m = 0.0;
  for (const auto& r : rows)
    if (ids.empty() || std::binary_search(ids.begin(), ids.end(), r.traj_id))
      m = std::min(m, r.t_back);
  return m;
}

std::vector<DatasetRow> Dataset::trajectory(int id) const {
  std::vector<DatasetRow> out;
  for (const auto& r : rows)
    if (r.traj_id == id) out.push_back(r);
  return out;
}

json Dataset::manifest() const {
  return {{"format_version", 1},
          {"scenario", scenario},
          {"seed", seed},
          {"draws", draws},
          {"trajectories", split.train.size() + split.validation.size() + split.test.size()},
          {"rows_file", kDatasetRowsFile},
          {"splits", {{"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
          {"t_min_train_s", t_min(split.train)},
          {"t_min_all_s", t_min()},
          {"phase_thresholds_km", json::array({phase_threshold_km})}};
}

Dataset generate_dataset(const MissionContext& ctx, int n_traj, int jobs) {
  if (n_traj < 1) throw ConfigError("n_traj must be >= 1");
  ScenarioConfig cfg = ctx.config();
  cfg.mc.runs = n_traj;
  const MissionContext local(cfg);
  const CampaignSummary camp = monte_carlo(local, MissionOptions{Mode::Tsg, nullptr, {}}, jobs, true);

  Dataset ds;
  ds.seed = cfg.mc.rng_seed;
  ds.draws = camp.draws;
  ds.scenario = cfg.name;
  for (const RunResult& r : camp.runs) {
    if (r.failed) throw IntegrationError("dataset trajectory " + std::to_string(r.index) +
                                             " failed: " + r.error, 0.0);
    for (std::size_t k = 0; k < r.log.rows.size(); ++k) {
      const LogRow& lr = r.log.rows[k];
      DatasetRow row;
      row.traj_id = r.index;
      row.step = static_cast<int>(k);
      row.t = lr.t;
      row.chief = lr.chief;
      row.deputy = lr.deputy;
      row.rel_distance = (lr.deputy.pos - lr.chief.pos).norm();
      row.t_back = lr.t_back;
      ds.rows.push_back(row);
    }
  }
  ds.split = split_trajectories(n_traj, cfg.mc.rng_seed);
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / kDatasetRowsFile);
  if (!out) throw ConfigError("cannot write dataset in " + dir.string());
  out << "traj_id,step,t_s";
  for (const char* who : {"xc", "xd"})
    for (const char* q : {"x", "y", "z", "vx", "vy", "vz"}) out << ',' << who << '_' << q;
  out << ",rel_distance_km,t_back_s\n" << std::setprecision(17);
  for (const auto& r : ds.rows) {
    out << r.traj_id << ',' << r.step << ',' << r.t;
    for (const StateVector* s : {&r.chief, &r.deputy}) {
      for (int i = 0; i < 3; ++i) out << ',' << s->pos(i);
      for (int i = 0; i < 3; ++i) out << ',' << s->vel(i);
    }
    out << ',' << r.rel_distance << ',' << r.t_back << '\n';
  }
  std::ofstream man(dir / kDatasetManifestFile);
  man << ds.manifest().dump(2) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  std::ifstream man(dir / kDatasetManifestFile);
  if (!man) throw ConfigError("missing dataset manifest in " + dir.string());
  Dataset ds;
  try {
    const json m = json::parse(man);
    ds.seed = m.at("seed").get<std::uint64_t>();
    ds.draws = m.value("draws", 0);
    ds.scenario = m.value("scenario", "");
    ds.split.train = m.at("splits").at("train").get<std::vector<int>>();
    ds.split.validation = m.at("splits").at("validation").get<std::vector<int>>();
    ds.split.test = m.at("splits").at("test").get<std::vector<int>>();
    if (m.contains("phase_thresholds_km") && !m["phase_thresholds_km"].empty())
      ds.phase_threshold_km = m["phase_thresholds_km"][0].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("dataset manifest: " + std::string(e.what()));
  }

  std::ifstream in(dir / kDatasetRowsFile);
  if (!in) throw ConfigError("missing dataset rows in " + dir.string());
  std::string line;
  std::getline(in, line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("dataset row " + std::to_string(lineno) + ": malformed number");
    }
    if (v.size() != 17)
      throw ConfigError("dataset row " + std::to_string(lineno) + ": expected 17 columns");
    DatasetRow r;
    r.traj_id = static_cast<int>(v[0]);
    r.step = static_cast<int>(v[1]);
    r.t = v[2];
    Vec6 c, d;
    for (int i = 0; i < 6; ++i) {
      c(i) = v[3 + i];
      d(i) = v[9 + i];
    }
    r.chief = StateVector::from_stacked(c);
    r.deputy = StateVector::from_stacked(d);
    r.rel_distance = v[15];
    r.t_back = v[16];
    ds.rows.push_back(r);
  }
  return ds;
}

}  // namespace ltsg
