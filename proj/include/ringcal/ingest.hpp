#pragma once

#include "ringcal/state.hpp"
#include "ringcal/types.hpp"

#include <cstddef>
#include <vector>

namespace ringcal {

/// Raw ring-road positions as recorded: one row per vehicle, one column per
/// sample, arc length in [0, C).
struct RawTrajectorySet {
    double dt = 1.0 / 3.0;
    double circumference = 230.0;
    Matrix positions;              // N x T, wrapped meters
    std::vector<double> lengths;   // per vehicle, meters

    std::size_t vehicle_count() const { return static_cast<std::size_t>(positions.rows()); }
    long sample_count() const { return static_cast<long>(positions.cols()); }

    /// Throws ValidationError unless every invariant holds.
    void validate() const;
};

/// A time series defined on the index window [first, first + size - 1].
/// `level` counts how many smoothing passes produced it.
struct Series {
    int level = 0;
    long first = 0;
    Vector values;

    long size() const { return static_cast<long>(values.size()); }
    long last() const { return first + size() - 1; }
    bool contains(long t) const { return t >= first && t <= last(); }
    double at(long t) const;
};

Series as_series(const Vector& values);

/// One pass of the (1, 2, 1) / 4 kernel. The result loses one index at each
/// end of the valid window. With `wrap`, values live on a circle of length
/// `circumference`: they are lifted before averaging and wrapped back after.
Series smooth_once(const Series& in, bool wrap = false, double circumference = 0.0);
Series smooth_once(const Vector& in, bool wrap = false, double circumference = 0.0);

/// Forward difference (in[t+1] - in[t]) / dt on [first, last - 1].
Series naive_derivative(const Series& in, double dt);
Series naive_derivative(const Vector& in, double dt);

struct UnwrapResult {
    Vector lift;
    /// Step indices t (jump between t-1 and t) whose resolved displacement
    /// reached the discontinuity threshold.
    std::vector<long> discontinuities;
};

/// Continuous lift of wrapped ring positions using the shortest signed
/// displacement per step. A step whose |displacement| >= max_step is flagged;
/// max_step <= 0 means C / 2.
UnwrapResult unwrap_positions(const Vector& wrapped, double circumference, double max_step = 0.0);

/// Wrap a value into [0, C).
double wrap_position(double x, double circumference);

/// Smoothed per-vehicle series on the unwrapped lift.
struct VehicleSeries {
    Series z;    // raw, unwrapped (level 0)
    Series x1;   // once smoothed positions
    Series v2;   // naive velocity of the twice smoothed positions
    Series a2;   // naive acceleration from v2
};

/// Everything the calibration needs from one recording: ring neighbours
/// (fixed from the ordering at the first sample), smoothed series, and the
/// perceived-state sequences on the common window [first, last].
struct PerceivedDataset {
    double dt = 0.0;
    double circumference = 0.0;
    std::vector<double> lengths;
    std::vector<std::size_t> predecessor;
    std::vector<std::size_t> follower;
    std::vector<VehicleSeries> series;
    long first = 0;
    long last = -1;
    std::vector<std::vector<PerceivedState>> states;   // [vehicle][t - first]

    std::size_t vehicle_count() const { return series.size(); }
    long window_size() const { return last - first + 1; }
};

/// Ring neighbours by instantaneous ordering of `positions` (wrapped).
/// predecessor[i] is the nearest vehicle strictly ahead of i.
void ring_neighbors(const Vector& positions, double circumference,
                    std::vector<std::size_t>& predecessor, std::vector<std::size_t>& follower);

PerceivedDataset build_perceived_states(const RawTrajectorySet& raw);

}  // namespace ringcal
