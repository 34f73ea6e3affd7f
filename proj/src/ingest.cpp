#include "ringcal/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ringcal {

void RawTrajectorySet::validate() const {
    require(dt > 0.0, "dt must be positive");
    require(circumference > 0.0, "circumference must be positive");
    require(lengths.size() == vehicle_count(), "vehicle_lengths count does not match vehicle count");
    double total = 0.0;
    for (double l : lengths) {
        require(l > 0.0, "vehicle lengths must be positive");
        total += l;
    }
    require(vehicle_count() == 0 || total < circumference, "sum of vehicle lengths must be below the circumference");
    require(positions.allFinite(), "positions must be finite");
    if (positions.size() > 0) {
        require(positions.minCoeff() >= 0.0 && positions.maxCoeff() < circumference,
                "positions must lie in [0, C)");
    }
}

double Series::at(long t) const {
    if (!contains(t)) {
        std::ostringstream msg;
        msg << "index " << t << " outside series window [" << first << ", " << last() << "]";
        throw ValidationError(msg.str());
    }
    return values[t - first];
}

Series as_series(const Vector& values) { return Series{0, 0, values}; }

double wrap_position(double x, double circumference) {
    double r = std::fmod(x, circumference);
    if (r < 0.0) r += circumference;
    // fmod of a tiny negative number can round up to C exactly
    if (r >= circumference) r = 0.0;
    return r;
}

Series smooth_once(const Series& in, bool wrap, double circumference) {
    require(in.size() >= 3, "smoothing needs at least 3 samples");
    Vector base = in.values;
    if (wrap) {
        require(circumference > 0.0, "wrapped smoothing needs a positive circumference");
        base = unwrap_positions(in.values, circumference).lift;
    }
    const long n = in.size() - 2;
    Series out{in.level + 1, in.first + 1, Vector(n)};
    for (long k = 0; k < n; ++k) {
        out.values[k] = 0.25 * (base[k] + 2.0 * base[k + 1] + base[k + 2]);
    }
    if (wrap) {
        for (long k = 0; k < n; ++k) out.values[k] = wrap_position(out.values[k], circumference);
    }
    return out;
}

Series smooth_once(const Vector& in, bool wrap, double circumference) {
    return smooth_once(as_series(in), wrap, circumference);
}

Series naive_derivative(const Series& in, double dt) {
    require(dt > 0.0, "dt must be positive");
    require(in.size() >= 2, "a derivative needs at least 2 samples");
    const long n = in.size() - 1;
    Series out{in.level, in.first, Vector(n)};
    for (long k = 0; k < n; ++k) out.values[k] = (in.values[k + 1] - in.values[k]) / dt;
    return out;
}

Series naive_derivative(const Vector& in, double dt) { return naive_derivative(as_series(in), dt); }

UnwrapResult unwrap_positions(const Vector& wrapped, double circumference, double max_step) {
    require(circumference > 0.0, "circumference must be positive");
    const double half = 0.5 * circumference;
    const double threshold = max_step > 0.0 ? max_step : half;
    UnwrapResult result{Vector(wrapped.size()), {}};
    if (wrapped.size() == 0) return result;
    result.lift[0] = wrapped[0];
    for (Eigen::Index t = 1; t < wrapped.size(); ++t) {
        double d = std::fmod(wrapped[t] - wrapped[t - 1], circumference);
        if (d >= half) d -= circumference;
        if (d < -half) d += circumference;
        if (std::abs(d) >= threshold) result.discontinuities.push_back(static_cast<long>(t));
        result.lift[t] = result.lift[t - 1] + d;
    }
    return result;
}

void ring_neighbors(const Vector& positions, double circumference,
                    std::vector<std::size_t>& predecessor, std::vector<std::size_t>& follower) {
    const std::size_t n = static_cast<std::size_t>(positions.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return wrap_position(positions[a], circumference) < wrap_position(positions[b], circumference);
    });
    predecessor.assign(n, 0);
    follower.assign(n, 0);
    // order is sorted by increasing arc length; the vehicle ahead is the next one
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t self = order[k];
        predecessor[self] = order[(k + 1) % n];
        follower[self] = order[(k + n - 1) % n];
    }
}

PerceivedDataset build_perceived_states(const RawTrajectorySet& raw) {
    raw.validate();
    const long T = raw.sample_count();
    require(T >= 7, "need at least 7 samples for second-order smoothing and acceleration");

    PerceivedDataset ds;
    ds.dt = raw.dt;
    ds.circumference = raw.circumference;
    ds.lengths = raw.lengths;
    const std::size_t n = raw.vehicle_count();
    if (n == 0) {
        ds.first = 2;
        ds.last = T - 4;
        return ds;
    }

    ring_neighbors(raw.positions.col(0), raw.circumference, ds.predecessor, ds.follower);

    ds.series.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector row = raw.positions.row(static_cast<Eigen::Index>(i)).transpose();
        VehicleSeries vs;
        vs.z = as_series(unwrap_positions(row, raw.circumference).lift);
        vs.x1 = smooth_once(vs.z);
        const Series x2 = smooth_once(vs.x1);
        vs.v2 = naive_derivative(x2, raw.dt);
        vs.a2 = naive_derivative(vs.v2, raw.dt);
        ds.series.push_back(std::move(vs));
    }

    // x1 lives on [1, T-2] and v2 on [2, T-4]
    ds.first = 2;
    ds.last = T - 4;
    ds.states.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const VehicleSeries& self = ds.series[i];
        auto& seq = ds.states[i];
        seq.reserve(static_cast<std::size_t>(ds.window_size()));
        const std::size_t p = ds.predecessor[i];
        const std::size_t f = ds.follower[i];
        for (long t = ds.first; t <= ds.last; ++t) {
            PerceivedState s;
            s.t = t;
            s.self_pos = self.x1.at(t);
            s.self_vel = self.v2.at(t);
            if (p != i) s.pred = NeighborState{ds.series[p].x1.at(t), ds.series[p].v2.at(t)};
            if (f != i) s.foll = NeighborState{ds.series[f].x1.at(t), ds.series[f].v2.at(t)};
            seq.push_back(s);
        }
    }
    return ds;
}

}  // namespace ringcal
