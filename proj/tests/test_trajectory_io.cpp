#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ltsg/errors.hpp"
#include "ltsg/trajectory_io.hpp"

using namespace ltsg;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(LTSG_SOURCE_DIR) / "models" / "fixtures";

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "ltsg_test_io" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Short ltsg run with governor updates every third step.
const TrajectoryLog& sample_log() {
  static const TrajectoryLog log = [] {
    ScenarioConfig cfg = preset("leo_crew3");
    cfg.sim_duration = 900.0;
    cfg.governor.p_tsg = 30.0;
    const MissionContext ctx(cfg);
    static const ModelRegistry reg = ModelRegistry::load_directory(kFixtures / "leo");
    MissionOptions opts;
    opts.mode = Mode::Ltsg;
    opts.registry = &reg;
    return run_mission(ctx, cfg.nominal_deputy(), opts);
  }();
  return log;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// Hand-built VNB axes: x along v, y along r x v, z completing the triad.
Mat3 vnb_axes(const StateVector& o) {
  Mat3 b;
  b.col(0) = o.vel.normalized();
  b.col(1) = o.pos.cross(o.vel).normalized();
  b.col(2) = b.col(0).cross(b.col(1));
  return b;
}

}  // namespace

TEST_CASE("log columns") {
  const auto& c = log_columns();
  CHECK(c.front() == "t_s");
  CHECK(c[1] == "xc_x");
  CHECK(c.size() == 1 + 18 + 3 + 1 + 4 + 5);
  for (const char* name : {"ux", "uy", "uz", "t_back_s", "h1", "h2", "h3", "h3_active",
                           "gov_path", "gov_wall_s"})
    CHECK(std::find(c.begin(), c.end(), name) != c.end());
}

TEST_CASE("log csv round trip") {
  const TrajectoryLog& log = sample_log();
  REQUIRE_FALSE(log.aborted);
  const fs::path p = scratch("roundtrip") / "log.csv";
  write_log_csv(p, log);
  const TrajectoryLog back = read_log_csv(p);
  REQUIRE(back.rows.size() == log.rows.size());
  CHECK(back.control_dt == log.control_dt);
  int with_gov = 0, without_gov = 0, predicted = 0;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const LogRow& a = log.rows[i];
    const LogRow& b = back.rows[i];
    CHECK(a.t == b.t);
    CHECK(a.chief.stacked() == b.chief.stacked());
    CHECK(a.deputy.stacked() == b.deputy.stacked());
    CHECK(a.target.stacked() == b.target.stacked());
    CHECK(a.u == b.u);
    CHECK(a.t_back == b.t_back);
    CHECK(a.report.h1 == b.report.h1);
    CHECK(a.report.h2 == b.report.h2);
    CHECK(a.report.h3 == b.report.h3);
    CHECK(a.report.satisfied == b.report.satisfied);
    REQUIRE(a.governor.has_value() == b.governor.has_value());
    if (a.governor) {
      ++with_gov;
      CHECK(a.governor->path == b.governor->path);
      CHECK(a.governor->wall_s == b.governor->wall_s);
      CHECK(a.governor->safe == b.governor->safe);
      CHECK(a.governor->verifications == b.governor->verifications);
      CHECK(a.governor->predicted == b.governor->predicted);
      if (a.governor->predicted) ++predicted;
    } else {
      ++without_gov;
    }
  }
  CHECK(with_gov > 0);
  CHECK(without_gov > 0);
  CHECK(predicted > 0);

  // Writing the read-back log reproduces the file byte for byte.
  const fs::path p2 = p.parent_path() / "again.csv";
  write_log_csv(p2, back);
  std::ifstream f1(p), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("malformed logs are rejected") {
  const fs::path d = scratch("malformed");
  {
    std::ofstream out(d / "header.csv");
    out << "t,x\n1,2\n";
  }
  CHECK_THROWS_AS(read_log_csv(d / "header.csv"), ConfigError);
  std::stringstream good;
  write_log_csv(good, sample_log());
  std::string text = good.str();
  const auto first_nl = text.find('\n');
  const auto second_nl = text.find('\n', first_nl + 1);
  {
    std::ofstream out(d / "short.csv");
    out << text.substr(0, first_nl + 1) << "1,2,3\n";
  }
  CHECK_THROWS_AS(read_log_csv(d / "short.csv"), ConfigError);
  {
    std::string row = text.substr(first_nl + 1, second_nl - first_nl - 1);
    row.replace(0, row.find(','), "abc");
    std::ofstream out(d / "number.csv");
    out << text.substr(0, first_nl + 1) << row << "\n";
  }
  CHECK_THROWS_AS(read_log_csv(d / "number.csv"), ConfigError);
  CHECK_THROWS_AS(read_log_csv(d / "missing.csv"), ConfigError);
}

TEST_CASE("plot export in the VNB frame") {
  const TrajectoryLog& log = sample_log();
  const fs::path d = scratch("vnb");
  export_plots(log, PlotFrame::Vnb, d);
  for (const char* f : {"rel_chief.csv", "rel_target.csv", "constraints.csv", "control.csv",
                        "t_back.csv"})
    CHECK(fs::exists(d / f));

  const auto rc = read_csv(d / "rel_chief.csv");
  const auto rt = read_csv(d / "rel_target.csv");
  const auto ct = read_csv(d / "control.csv");
  REQUIRE(rc.size() == log.rows.size() + 1);
  CHECK(rc[0][0] == "t_s");
  double worst = 0.0;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const LogRow& r = log.rows[i];
    const Mat3 bc = vnb_axes(r.chief);
    const Mat3 bt = vnb_axes(r.target);
    const Vec3 pc = bc.transpose() * (r.deputy.pos - r.chief.pos);
    const Vec3 vc = bc.transpose() * (r.deputy.vel - r.chief.vel);
    const Vec3 pt = bt.transpose() * (r.deputy.pos - r.target.pos);
    const Vec3 uc = bc.transpose() * r.u;
    for (int k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(std::stod(rc[i + 1][1 + k]) - pc(k)));
      worst = std::max(worst, std::abs(std::stod(rc[i + 1][4 + k]) - vc(k)));
      worst = std::max(worst, std::abs(std::stod(rt[i + 1][1 + k]) - pt(k)));
      worst = std::max(worst, std::abs(std::stod(ct[i + 1][1 + k]) - uc(k)) * 1e6);
    }
    CHECK(std::stod(ct[i + 1][4]) == doctest::Approx(r.u.norm()).epsilon(1e-14));
  }
  CHECK(worst < 1e-9);

  // Relative distance is frame independent.
  const Vec3 first(std::stod(rc[1][1]), std::stod(rc[1][2]), std::stod(rc[1][3]));
  CHECK(first.norm() ==
        doctest::Approx((log.rows[0].deputy.pos - log.rows[0].chief.pos).norm()).epsilon(1e-12));
}

TEST_CASE("plot export in ECI and constraint columns") {
  const TrajectoryLog& log = sample_log();
  const fs::path d = scratch("eci");
  export_plots(log, PlotFrame::Eci, d);
  const auto rc = read_csv(d / "rel_chief.csv");
  const auto cs = read_csv(d / "constraints.csv");
  const auto tb = read_csv(d / "t_back.csv");
  REQUIRE(cs.size() == log.rows.size() + 1);
  CHECK(cs[0] == std::vector<std::string>{"t_s", "h1", "h2", "h3", "h3_active"});
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const LogRow& r = log.rows[i];
    CHECK(std::stod(cs[i + 1][1]) == r.report.h1);
    CHECK(std::stod(cs[i + 1][2]) == r.report.h2);
    CHECK(cs[i + 1][4] == (r.report.h3 ? "1" : "0"));
    if (r.report.h3) CHECK(std::stod(cs[i + 1][3]) == *r.report.h3);
    CHECK(std::stod(rc[i + 1][1]) == r.deputy.pos.x() - r.chief.pos.x());
    CHECK(std::stod(tb[i + 1][1]) == r.t_back);
    CHECK(tb[i + 1][2] == (r.governor ? std::string(to_string(r.governor->path)) : "none"));
  }
  CHECK(plot_frame_from_string("vnb") == PlotFrame::Vnb);
  CHECK(plot_frame_from_string("eci") == PlotFrame::Eci);
  CHECK_THROWS_AS(plot_frame_from_string("lvlh"), ConfigError);
}

TEST_CASE("metrics json keeps timing separate") {
  Metrics m;
  m.delta_v = 0.4;
  m.avg_update_time = 0.01;
  m.worst_update_time = 0.02;
  m.completed = true;
  const auto j = metrics_json(m);
  CHECK(j["delta_v_km_s"] == 0.4);
  CHECK(j["completed"] == true);
  CHECK_FALSE(j.contains("avg_update_time_s"));
  const auto t = timing_json(m);
  CHECK(t["avg_update_time_s"] == 0.01);
  CHECK(t["worst_update_time_s"] == 0.02);

  CampaignSummary s;
  s.scenario = "leo_crew3";
  s.seed = 4;
  RunResult r;
  r.metrics = m;
  s.runs.push_back(r);
  const auto c = campaign_json(s);
  CHECK(c["retained"] == 1);
  CHECK(c["aggregate"]["completed"] == 1);
  CHECK(c["runs"][0]["deputy0"].size() == 6);
  CHECK_FALSE(c.dump().find("update_time") != std::string::npos);
  CHECK(campaign_timing_json(s)["mean_avg_update_time_s"] == 0.01);
}
