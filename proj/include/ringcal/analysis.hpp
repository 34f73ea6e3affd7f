#pragma once

#include "ringcal/calibrate.hpp"
#include "ringcal/sim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ringcal {

/// Fleet speed statistics per time sample.
struct SpeedProfile {
    Vector v_avg, v_min, v_max, v_range;

    long size() const { return static_cast<long>(v_avg.size()); }
};

/// Speeds are N x T (vehicle rows).
SpeedProfile speed_profile(const Matrix& v);

struct WaveOptions {
    double slow_threshold = 2.0;   // m/s
    double dt = 1.0 / 3.0;
    double circumference = 230.0;
    long first = 0;                // first sample analysed (burn-in cut)
    double min_track_s = 3.0;      // shorter slow-cluster tracks are ignored
    double min_period_s = 20.0;
    double max_period_s = 100.0;
};

struct WaveMetrics {
    std::optional<double> backward_wave_speed;   // m/s, negative = upstream
    double mean_queue_length = 0.0;              // vehicles per slow cluster
    double queue_event_frequency = 0.0;          // tracked clusters per 100 s
    double quasi_period_amplitude = 0.0;         // m/s
    int tracks = 0;
};

/// Slow clusters are maximal runs of ring-adjacent vehicles below the
/// threshold. Their centroids are tracked between samples and the wave speed
/// is the pooled within-track least-squares slope of centroid position.
WaveMetrics wave_metrics(const Matrix& x, const Matrix& v, const WaveOptions& opts);

/// Peak single-sided DFT amplitude of the linearly detrended series over
/// periods in [min_period, max_period].
double quasi_period_amplitude(const Vector& series, double dt, double min_period, double max_period);

/// Scalar summaries of one run after burn-in, used by the scenario studies.
struct CollectiveSummary {
    double mean_v_avg = 0.0;
    double max_v_max = 0.0;
    double max_v_range = 0.0;
    double slow_fraction = 0.0;     // fraction of samples with V_min < 1 m/s
    int slow_episodes = 0;          // separate runs of V_min < 1 m/s
    double range_over_2_s = 0.0;    // total time with V_range > 2 m/s
    WaveMetrics waves;
    std::vector<double> mean_gap;   // per agent, bumper-to-bumper, m
};

CollectiveSummary collective_summary(const SimOutput& out, double slow_threshold = 2.0);

struct MergeStep {
    int left = 0;    // ids < n are vehicles, n + k is the cluster formed at merge k
    int right = 0;
    double height = 0.0;
    int size = 0;
};

struct ClusterResult {
    Matrix features;                      // standardised, n x 3 (sigma_a, v_star, kappa_v)
    std::vector<MergeStep> tree;          // n - 1 merges, nondecreasing height
    int k = 0;
    std::vector<int> labels;              // default cut
    Matrix cluster_means;                 // k x 3, raw units
    int gap_k = 0;
    std::vector<int> gap_labels;          // largest-gap cut
    std::vector<std::string> warnings;
};

/// Ward agglomerative clustering of standardised rows of `raw`.
ClusterResult cluster_features(const Matrix& raw, int k = 4);
/// Clustering on (sigma_a, v_star, kappa_v) of calibrated vehicles.
ClusterResult cluster_drivers(const std::vector<CalibrationResult>& results, int k = 4);

/// Labels after applying merges until `k` clusters remain, numbered by first
/// appearance in row order.
std::vector<int> cut_tree(const std::vector<MergeStep>& tree, int n, int k);
/// Cluster count at the largest jump in merge height (1 when there is none).
int largest_gap_clusters(const std::vector<MergeStep>& tree, int n);

struct FundamentalDiagramPoint {
    std::size_t vehicles = 0;
    double density = 0.0;      // vehicles / km
    double mean_speed = 0.0;   // m/s
    double flow = 0.0;         // vehicles / hour
    double max_v_range = 0.0;  // m/s, after burn-in
};

/// One point per run, sorted by density; speeds averaged after each run's burn-in.
std::vector<FundamentalDiagramPoint> fundamental_diagram(const std::vector<SimOutput>& runs);

struct RecoveryRow {
    std::string name;
    double truth = 0.0;
    double mean_error = 0.0;
    double sd_error = 0.0;
    double mean_abs_error = 0.0;
    bool biased = false;
};

/// Per free parameter: mean and SD of estimate - truth across vehicles.
std::vector<RecoveryRow> recovery_report(const DriverParams& truth, const std::vector<CalibrationResult>& estimates);

}  // namespace ringcal
