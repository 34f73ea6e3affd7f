#pragma once

#include "ringcal/analysis.hpp"
#include "ringcal/calibrate.hpp"
#include "ringcal/ingest.hpp"
#include "ringcal/sim.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ringcal::io {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);

/// `key=value` lines; blank lines and lines starting with '#' are skipped.
/// Duplicate keys and keys outside `allowed` (when non-empty) are rejected.
std::map<std::string, std::string> read_key_values(const fs::path& path, const std::vector<std::string>& allowed = {});

/// Companion metadata path of a trajectory CSV: same stem, `.meta` extension.
fs::path meta_path_for(const fs::path& csv);

/// Trajectory CSV (`t_index,vehicle_id,position_m`, or `position_rad` after a
/// `units=rad` line) plus its metadata. Every (t, vehicle) pair must appear
/// exactly once; radians are converted to meters at load.
RawTrajectorySet read_trajectories(const fs::path& csv, const fs::path& meta);
void write_trajectories(const RawTrajectorySet& raw, const fs::path& csv, const fs::path& meta);
RawTrajectorySet trajectories_of(const SimOutput& out);

/// `t_index,vehicle_id,x1,v2,a2` over the perceived window; samples a series
/// does not cover are left empty.
void write_smoothed(const PerceivedDataset& ds, const fs::path& csv);
/// `t_index,vehicle_id,pred_id,self_pos,self_vel,pred_pos,pred_vel,foll_pos,foll_vel`
void write_perceived(const PerceivedDataset& ds, const fs::path& csv);

/// `vehicle_id,sigma_nu,sigma_a,v_star,kappa_v,objective,converged`
void write_results(const std::vector<CalibrationResult>& results, const fs::path& csv);
/// Rows of a results file; only the free parameters, objective and flag are filled.
std::vector<CalibrationResult> read_results(const fs::path& csv, const DriverParams& base = DriverParams{});

/// `t_index,x_mean,v_mean,a_mean,x_sd,v_sd,a_sd`
void write_filtered(const CalibrationResult& result, long first_t, const fs::path& csv);

/// `t_index,v_avg,v_min,v_max,v_range`
void write_speed_profile(const SpeedProfile& p, long first_t, const fs::path& csv);
/// One header line and one row; an absent wave speed is an empty field.
void write_wave_metrics(const WaveMetrics& m, const fs::path& csv);
/// `vehicle_id,cluster`
void write_clusters(const std::vector<int>& labels, const fs::path& csv);
/// `merge,left,right,height,size`
void write_merge_tree(const std::vector<MergeStep>& tree, const fs::path& csv);
/// `density,mean_speed,flow`
void write_fundamental_diagram(const std::vector<FundamentalDiagramPoint>& pts, const fs::path& csv);
/// `parameter,truth,mean_error,sd_error,mean_abs_error,biased`
void write_recovery(const std::vector<RecoveryRow>& rows, const fs::path& csv);

/// Free parameters from a `key=value` truth file (sigma_nu, sigma_a, v_star, kappa_v).
DriverParams read_truth(const fs::path& path, const DriverParams& base = DriverParams{});

void write_text(const fs::path& path, const std::string& text);

}  // namespace ringcal::io
