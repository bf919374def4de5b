#include "ltsg/cli.hpp"

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "ltsg/dataset.hpp"
#include "ltsg/errors.hpp"
#include "ltsg/lstm.hpp"
#include "ltsg/scenario.hpp"
#include "ltsg/simulation.hpp"
#include "ltsg/trajectory_io.hpp"

namespace ltsg::cli {

namespace fs = std::filesystem;

namespace {

// Usage errors found after CLI11 parsing (bad config, missing --models...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ScenarioConfig load_config(const std::string& spec, std::optional<double> duration) {
  try {
    ScenarioConfig cfg = resolve_config(spec);
    if (duration) {
      cfg.sim_duration = *duration;
      cfg.validate();
    }
    return cfg;
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

Vec6 parse_offset(const std::string& csv) {
  std::stringstream ss(csv);
  std::string cell;
  std::vector<double> v;
  try {
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
  } catch (const std::exception&) {
    throw UsageError("--deputy-offset: malformed number in '" + csv + "'");
  }
  if (v.size() != 6) throw UsageError("--deputy-offset needs 6 comma-separated values");
  Vec6 x;
  for (int i = 0; i < 6; ++i) x(i) = v[i];
  return x;
}

fs::path sibling(const fs::path& log, const std::string& suffix) {
  fs::path p = log;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

struct SimulateArgs {
  std::string config;
  std::string mode = "tsg";
  std::string models;
  std::string offset;
  std::string out = "trajectory.csv";
  std::optional<double> duration;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ScenarioConfig cfg = load_config(a.config, a.duration);
  if (!a.offset.empty()) cfg.nominal_rel_state = parse_offset(a.offset);
  const Mode mode = mode_from_string(a.mode);
  if (mode == Mode::Ltsg && a.models.empty())
    throw UsageError("--mode ltsg requires --models DIR");

  ModelRegistry registry;
  if (mode == Mode::Ltsg) registry = ModelRegistry::load_directory(a.models);

  const MissionContext ctx(cfg);
  MissionOptions opts{mode, mode == Mode::Ltsg ? &registry : nullptr, {}};
  const TrajectoryLog log = run_mission(ctx, cfg.nominal_deputy(), opts);
  const Metrics m = compute_metrics(log, cfg.completion_threshold);

  write_log_csv(a.out, log);
  write_json(sibling(a.out, ".metrics.json"), metrics_json(m));
  write_json(sibling(a.out, ".timing.json"), timing_json(m));

  out << "scenario " << cfg.name << " mode " << to_string(mode) << ": steps "
      << log.rows.size() << ", delta_v " << m.delta_v << " km/s, final distance "
      << m.final_rel_distance << " km, final t_back " << m.final_t_back
      << " s, violations " << m.constraint_violations
      << (m.completed ? ", completed" : ", not completed") << "\n";
  if (!log.initial_feasible) out << "warning: no admissible initial shift\n";
  if (log.aborted) {
    out << "aborted: " << log.error << "\n";
    return kError;
  }
  return m.constraint_violations > 0 ? kViolation : kOk;
}

struct MonteCarloArgs {
  std::string config;
  std::string mode = "tsg";
  std::string models;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::string out = "campaign";
  int jobs = 0;
  std::optional<double> duration;
};

int default_jobs(int jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_montecarlo(const MonteCarloArgs& a, std::ostream& out) {
  ScenarioConfig cfg = load_config(a.config, a.duration);
  if (a.runs) cfg.mc.runs = *a.runs;
  if (a.seed) cfg.mc.rng_seed = *a.seed;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const Mode mode = mode_from_string(a.mode);
  if (mode == Mode::Ltsg && a.models.empty())
    throw UsageError("--mode ltsg requires --models DIR");
  ModelRegistry registry;
  if (mode == Mode::Ltsg) registry = ModelRegistry::load_directory(a.models);

  const MissionContext ctx(cfg);
  MissionOptions opts{mode, mode == Mode::Ltsg ? &registry : nullptr, {}};
  const CampaignSummary s = monte_carlo(ctx, opts, default_jobs(a.jobs), true);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (const RunResult& r : s.runs) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03d.csv", r.index);
    write_log_csv(dir / name, r.log);
  }
  write_json(dir / "summary.json", campaign_json(s));
  write_json(dir / "timing.json", campaign_timing_json(s));

  out << "campaign " << cfg.name << " mode " << to_string(mode) << ": " << s.runs.size()
      << " runs (" << s.draws << " draws), completed " << s.completed() << ", failed "
      << s.failed() << ", violations " << s.total_violations() << ", mean delta_v "
      << s.mean_delta_v() << " km/s, mean update " << s.mean_avg_update_time() << " s\n";
  if (s.total_violations() > 0) return kViolation;
  return s.failed() > 0 ? kError : kOk;
}

struct DatasetArgs {
  std::string config;
  int trajectories = 50;
  std::optional<std::uint64_t> seed;
  std::string out = "dataset";
  int jobs = 0;
};

int cmd_gen_dataset(const DatasetArgs& a, std::ostream& out) {
  ScenarioConfig cfg = load_config(a.config, std::nullopt);
  if (a.seed) cfg.mc.rng_seed = *a.seed;
  const MissionContext ctx(cfg);
  const Dataset ds = generate_dataset(ctx, a.trajectories, default_jobs(a.jobs));
  write_dataset(ds, a.out);
  out << "dataset " << cfg.name << ": " << a.trajectories << " trajectories, "
      << ds.rows.size() << " rows, split " << ds.split.train.size() << "/"
      << ds.split.validation.size() << "/" << ds.split.test.size() << ", t_min "
      << ds.t_min(ds.split.train) << " s\n";
  return kOk;
}

struct VerifyArgs {
  std::string model;
  std::string dataset;
  double eta = 1.0;
};

// Windows of `len` features with ECI-like magnitudes.
std::vector<std::vector<Feature>> fixture_windows(int len) {
  std::mt19937_64 rng(0x5eed1e57ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<Feature>> out(16);
  for (auto& w : out) {
    w.resize(len);
    for (auto& f : w)
      for (int i = 0; i < kFeatureDim; ++i) f(i) = u(rng) * ((i % 6) < 3 ? 7000.0 : 7.5);
  }
  return out;
}

int cmd_verify_model(const VerifyArgs& a, std::ostream& out) {
  const LstmModel model = LstmModel::load(a.model);
  out << "model " << a.model << ": hidden " << model.hidden_size << ", window "
      << model.window_size << ", phase [" << model.phase_lo_km << ", "
      << model.phase_hi_km << ") km, t_min " << model.t_min << " s\n";
  out << "dimensions: ok (w_ih " << model.w_ih.rows() << "x" << model.w_ih.cols()
      << ", w_hh " << model.w_hh.rows() << "x" << model.w_hh.cols() << ", fc "
      << model.fc_w.cols() << ")\n";
  out << "parity_hash: " << parity_hash(model) << "\n";

  double lo = INFINITY, hi = -INFINITY;
  for (const auto& w : fixture_windows(model.window_size)) {
    const double s = denormalize(model, lstm_forward(model, w));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  out << std::setprecision(10);
  if (lo == hi)
    out << "prediction: constant " << lo << " s\n";
  else
    out << "prediction: range [" << lo << ", " << hi << "] s\n";

  if (!a.dataset.empty()) {
    const Dataset ds = read_dataset(a.dataset);
    std::vector<double> pred, target;
    for (int id : ds.split.test) {
      const auto rows = ds.trajectory(id);
      std::vector<Feature> feats;
      for (const auto& r : rows) feats.push_back(make_feature(r.chief, r.deputy));
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (!model.contains_phase(rows[k].rel_distance)) continue;
        if (k + 1 < static_cast<std::size_t>(model.window_size)) continue;
        std::span<const Feature> seq(feats.data() + k + 1 - model.window_size,
                                     model.window_size);
        pred.push_back(lstm_forward(model, seq));
        target.push_back(normalize(model, rows[k].t_back));
      }
    }
    if (pred.empty()) {
      out << "test split: no windows in phase\n";
    } else {
      const LossBreakdown l = shift_loss(pred, target, a.eta);
      out << "test split: " << pred.size() << " windows, mse " << l.mse << ", msrelu "
          << l.msrelu << ", total " << l.total << " (eta " << a.eta << ")\n";
    }
  }
  return kOk;
}

struct ExportArgs {
  std::string log;
  std::string frame = "vnb";
  std::string out = "plots";
};

int cmd_export_plots(const ExportArgs& a, std::ostream& out) {
  const TrajectoryLog log = read_log_csv(a.log);
  export_plots(log, plot_frame_from_string(a.frame), a.out);
  out << "exported " << log.rows.size() << " rows (" << a.frame << ") to " << a.out << "\n";
  return kOk;
}

}  // namespace

std::string parity_hash(const LstmModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : fixture_windows(model.window_size)) {
    const auto q = static_cast<std::int64_t>(std::llround(lstm_forward(model, w) * 1e9));
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(q >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-based time shift governor for spacecraft rendezvous", "ltsg"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run one closed-loop mission");
  s->add_option("--config", sim.config, "Config file or preset name")->required();
  s->add_option("--mode", sim.mode)->check(CLI::IsMember({"tsg", "ltsg"}));
  s->add_option("--models", sim.models, "Model directory (ltsg)");
  s->add_option("--deputy-offset", sim.offset, "x,y,z,vx,vy,vz relative to chief (ECI)");
  s->add_option("--out", sim.out, "Trajectory CSV path");
  s->add_option("--duration", sim.duration, "Override sim_duration [s]");

  MonteCarloArgs mc;
  auto* m = app.add_subcommand("montecarlo", "Monte Carlo campaign");
  m->add_option("--config", mc.config)->required();
  m->add_option("--mode", mc.mode)->check(CLI::IsMember({"tsg", "ltsg"}));
  m->add_option("--models", mc.models);
  m->add_option("--runs", mc.runs)->check(CLI::PositiveNumber);
  m->add_option("--seed", mc.seed);
  m->add_option("--out", mc.out, "Output directory");
  m->add_option("--jobs", mc.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  m->add_option("--duration", mc.duration, "Override sim_duration [s]");

  DatasetArgs ds;
  auto* g = app.add_subcommand("gen-dataset", "Generate a training dataset with the bisection governor");
  g->add_option("--config", ds.config)->required();
  g->add_option("--trajectories", ds.trajectories)->check(CLI::PositiveNumber);
  g->add_option("--seed", ds.seed);
  g->add_option("--out", ds.out, "Output directory");
  g->add_option("--jobs", ds.jobs)->check(CLI::NonNegativeNumber);

  VerifyArgs vm;
  auto* v = app.add_subcommand("verify-model", "Validate a model file and report its errors");
  v->add_option("--model", vm.model)->required();
  v->add_option("--dataset", vm.dataset, "Dataset directory for the test-split report");
  v->add_option("--eta", vm.eta, "Positive-error penalty weight")->check(CLI::NonNegativeNumber);

  ExportArgs ex;
  auto* e = app.add_subcommand("export-plots", "Write plot-ready CSVs from a trajectory log");
  e->add_option("--log", ex.log)->required();
  e->add_option("--frame", ex.frame)->check(CLI::IsMember({"vnb", "eci"}));
  e->add_option("--out", ex.out, "Output directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe, out, err);
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim, out);
    if (m->parsed()) return cmd_montecarlo(mc, out);
    if (g->parsed()) return cmd_gen_dataset(ds, out);
    if (v->parsed()) return cmd_verify_model(vm, out);
    if (e->parsed()) return cmd_export_plots(ex, out);
  } catch (const UsageError& ue) {
    err << "usage error: " << ue.what() << "\n";
    return kUsage;
  } catch (const ModelFormatError& me) {
    err << "malformed model at " << me.field() << ": " << me.what() << "\n";
    return kBadModel;
  } catch (const std::exception& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kError;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ltsg::cli
