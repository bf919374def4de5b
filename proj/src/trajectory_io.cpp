#include "ltsg/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ltsg/errors.hpp"

namespace ltsg {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"t_s"};
    for (const char* who : {"xc", "xd", "xv"})
      for (const char* q : {"x", "y", "z", "vx", "vy", "vz"})
        c.push_back(std::string(who) + "_" + q);
    for (const char* s : {"ux", "uy", "uz", "t_back_s", "h1", "h2", "h3", "h3_active",
                          "gov_path", "gov_wall_s", "gov_pred_s", "gov_safe", "gov_verifications"})
      c.emplace_back(s);
    return c;
  }();
  return cols;
}

namespace {

void put_state(std::ostream& out, const StateVector& s) {
  for (int i = 0; i < 3; ++i) out << ',' << s.pos(i);
  for (int i = 0; i < 3; ++i) out << ',' << s.vel(i);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

void write_log_csv(std::ostream& out, const TrajectoryLog& log) {
  const auto& cols = log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  const auto old = out.precision(17);
  for (const LogRow& r : log.rows) {
    out << r.t;
    put_state(out, r.chief);
    put_state(out, r.deputy);
    put_state(out, r.target);
    out << ',' << r.u(0) << ',' << r.u(1) << ',' << r.u(2) << ',' << r.t_back << ','
        << r.report.h1 << ',' << r.report.h2 << ',';
    if (r.report.h3)
      out << *r.report.h3 << ",1";
    else
      out << "nan,0";
    if (r.governor) {
      out << ',' << to_string(r.governor->path) << ',' << r.governor->wall_s << ',';
      if (r.governor->predicted)
        out << *r.governor->predicted;
      else
        out << "nan";
      out << ',' << (r.governor->safe ? 1 : 0) << ',' << r.governor->verifications;
    } else {
      out << ",none,0,nan,1,0";
    }
    out << '\n';
  }
  out.precision(old);
}

void write_log_csv(const fs::path& path, const TrajectoryLog& log) {
  std::ofstream out = open_out(path);
  write_log_csv(out, log);
}

TrajectoryLog read_log_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log: " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != log_columns())
    throw ConfigError("log " + path.string() + ": unexpected header");
  const std::size_t ncol = log_columns().size();

  TrajectoryLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != ncol)
      throw ConfigError("log " + path.string() + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(ncol) + " columns");
    try {
      std::size_t i = 0;
      auto num = [&] { return parse_double(c[i++]); };
      auto state = [&] {
        StateVector s;
        for (int k = 0; k < 3; ++k) s.pos(k) = num();
        for (int k = 0; k < 3; ++k) s.vel(k) = num();
        return s;
      };
      LogRow r;
      r.t = num();
      r.chief = state();
      r.deputy = state();
      r.target = state();
      for (int k = 0; k < 3; ++k) r.u(k) = num();
      r.t_back = num();
      r.report.h1 = num();
      r.report.h2 = num();
      const double h3 = num();
      if (c[i++] == "1") r.report.h3 = h3;
      r.report.satisfied = r.report.h1 <= 0.0 && r.report.h2 <= 0.0 &&
                           (!r.report.h3 || *r.report.h3 <= 0.0);
      const std::string path_s = c[i++];
      const double wall = num();
      const double pred = num();
      const bool safe = c[i++] == "1";
      const int verifications = std::stoi(c[i++]);
      if (path_s != "none") {
        GovernorRecord g;
        g.t = r.t;
        g.path = governor_path_from_string(path_s);
        g.wall_s = wall;
        if (!std::isnan(pred)) g.predicted = pred;
        g.adopted = r.t_back;
        g.safe = safe;
        g.verifications = verifications;
        r.governor = g;
      }
      log.rows.push_back(std::move(r));
    } catch (const std::invalid_argument&) {
      throw ConfigError("log " + path.string() + ":" + std::to_string(lineno) +
                        ": malformed number");
    } catch (const std::out_of_range&) {
      throw ConfigError("log " + path.string() + ":" + std::to_string(lineno) +
                        ": number out of range");
    }
  }
  if (log.rows.size() > 1) log.control_dt = log.rows[1].t - log.rows[0].t;
  if (!log.rows.empty()) {
    log.final_t = log.rows.back().t;
    log.final_chief = log.rows.back().chief;
    log.final_deputy = log.rows.back().deputy;
  }
  return log;
}

json metrics_json(const Metrics& m) {
  return {{"delta_v_km_s", m.delta_v},
          {"final_rel_distance_km", m.final_rel_distance},
          {"final_t_back_s", m.final_t_back},
          {"constraint_violations", m.constraint_violations},
          {"governor_updates", m.governor_updates},
          {"completed", m.completed},
          {"aborted", m.aborted}};
}

json timing_json(const Metrics& m) {
  return {{"avg_update_time_s", m.avg_update_time},
          {"worst_update_time_s", m.worst_update_time},
          {"governor_updates", m.governor_updates}};
}

json campaign_json(const CampaignSummary& s) {
  json runs = json::array();
  for (const RunResult& r : s.runs) {
    json j = metrics_json(r.metrics);
    j["index"] = r.index;
    j["deputy0"] = json::array();
    for (int i = 0; i < 6; ++i) j["deputy0"].push_back(r.deputy0.stacked()(i));
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    runs.push_back(std::move(j));
  }
  return {{"scenario", s.scenario},
          {"mode", std::string(to_string(s.mode))},
          {"seed", s.seed},
          {"draws", s.draws},
          {"retained", s.runs.size()},
          {"aggregate",
           {{"completed", s.completed()},
            {"failed", s.failed()},
            {"total_violations", s.total_violations()},
            {"runs_with_violations", s.runs_with_violations()},
            {"mean_delta_v_km_s", s.mean_delta_v()},
            {"max_delta_v_km_s", s.max_delta_v()}}},
          {"runs", std::move(runs)}};
}

json campaign_timing_json(const CampaignSummary& s) {
  json runs = json::array();
  for (const RunResult& r : s.runs) {
    json j = timing_json(r.metrics);
    j["index"] = r.index;
    runs.push_back(std::move(j));
  }
  return {{"mean_avg_update_time_s", s.mean_avg_update_time()},
          {"worst_update_time_s", s.worst_update_time()},
          {"runs", std::move(runs)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

PlotFrame plot_frame_from_string(std::string_view s) {
  if (s == "eci") return PlotFrame::Eci;
  if (s == "vnb") return PlotFrame::Vnb;
  throw ConfigError("unknown frame '" + std::string(s) + "' (expected vnb or eci)");
}

namespace {

// Relative state of `other` w.r.t. `origin` in the chosen axes.
StateVector relative(const StateVector& origin, const StateVector& other, PlotFrame f) {
  const StateVector d = other - origin;
  if (f == PlotFrame::Eci) return d;
  const VnbFrame frame = vnb_frame(origin);
  return {to_vnb(frame, other), rotate_to_vnb(frame, d.vel)};
}

}  // namespace

void export_plots(const TrajectoryLog& log, PlotFrame frame, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream rc = open_out(dir / "rel_chief.csv");
  std::ofstream rt = open_out(dir / "rel_target.csv");
  std::ofstream cs = open_out(dir / "constraints.csv");
  std::ofstream ct = open_out(dir / "control.csv");
  std::ofstream tb = open_out(dir / "t_back.csv");
  rc << "t_s,x,y,z,vx,vy,vz\n";
  rt << "t_s,x,y,z,vx,vy,vz\n";
  cs << "t_s,h1,h2,h3,h3_active\n";
  ct << "t_s,ux,uy,uz,u_norm\n";
  tb << "t_s,t_back_s,gov_path\n";
  for (const LogRow& r : log.rows) {
    rc << r.t;
    put_state(rc, relative(r.chief, r.deputy, frame));
    rc << '\n';
    rt << r.t;
    put_state(rt, relative(r.target, r.deputy, frame));
    rt << '\n';
    cs << r.t << ',' << r.report.h1 << ',' << r.report.h2 << ',';
    if (r.report.h3)
      cs << *r.report.h3 << ",1\n";
    else
      cs << "nan,0\n";
    const Vec3 u = frame == PlotFrame::Eci ? r.u : rotate_to_vnb(vnb_frame(r.chief), r.u);
    ct << r.t << ',' << u(0) << ',' << u(1) << ',' << u(2) << ',' << u.norm() << '\n';
    tb << r.t << ',' << r.t_back << ','
       << (r.governor ? to_string(r.governor->path) : std::string_view("none")) << '\n';
  }
}

}  // namespace ltsg
