#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ltsg/simulation.hpp"

namespace ltsg {

/// Header of the trajectory CSV, one row per control step.
const std::vector<std::string>& log_columns();

void write_log_csv(std::ostream& out, const TrajectoryLog& log);
void write_log_csv(const std::filesystem::path& path, const TrajectoryLog& log);

/// Reads a log written by write_log_csv. The final state is not part of the
/// CSV; final_* fields are left at the last row.
TrajectoryLog read_log_csv(const std::filesystem::path& path);

/// Deterministic fields only (no wall-clock values).
nlohmann::json metrics_json(const Metrics& m);
nlohmann::json timing_json(const Metrics& m);

nlohmann::json campaign_json(const CampaignSummary& s);
nlohmann::json campaign_timing_json(const CampaignSummary& s);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

enum class PlotFrame { Eci, Vnb };
PlotFrame plot_frame_from_string(std::string_view s);

/// Writes rel_chief.csv, rel_target.csv, constraints.csv, control.csv and
/// t_back.csv into `dir`. In the VNB frame positions relative to the chief
/// (target) are expressed in the chief's (target's) VNB axes; relative
/// velocities and the control are rotated without transport terms.
void export_plots(const TrajectoryLog& log, PlotFrame frame,
                  const std::filesystem::path& dir);

}  // namespace ltsg
