#include "ringcal/utility.hpp"

#include "ringcal/ingest.hpp"

#include <algorithm>
#include <cmath>

namespace ringcal {

void UtilityParams::validate() const {
    require(kappa1 > 0.0, "kappa1 must be positive");
    require(v_star > 0.0, "v_star must be positive");
    require(kappa_c >= 0.0 && kappa_v >= 0.0 && kappa_d >= 0.0, "headway scales must be non-negative");
    require(omega2 < 0.0, "omega2 must be negative");
    require(omega1 == 1.0, "omega1 is fixed at 1");
}

void AnticipationConfig::validate() const {
    require(h >= 1, "anticipation horizon h must be at least 1");
    require(dt > 0.0, "anticipation dt must be positive");
}

double phi1(double v, const UtilityParams& p) {
    const double u = (v - p.v_star) / (p.kappa1 * p.v_star);
    return (1.0 - std::exp(-10.0 * (v + 0.25))) - (1.0 - std::exp(-u * u));
}

double front_scale(double v_self, double v_pred, const UtilityParams& p) {
    return p.kappa_c + p.kappa_v * std::abs(v_self) + p.kappa_d * std::max(v_self - v_pred, 0.0);
}

double phi2(double gap, double sigma) {
    require(sigma > 0.0, "headway scale sigma must be positive");
    if (gap <= 0.0) return 1.0;
    const double r = gap / sigma;
    return std::exp(-r * r - 2.0 * r);
}

AnticipatedRollout anticipate(const PerceivedState& s, double a, const AnticipationConfig& cfg) {
    cfg.validate();
    const auto h = static_cast<std::size_t>(cfg.h);
    AnticipatedRollout r;
    r.ego_x.resize(h);
    r.ego_v.resize(h);
    double x = s.self_pos;
    double v = s.self_vel;
    for (std::size_t k = 0; k < h; ++k) {
        x += cfg.dt * v;
        v = s.self_vel + static_cast<double>(k + 1) * cfg.dt * a;
        r.ego_x[k] = x;
        r.ego_v[k] = v;
    }
    if (s.pred) {
        r.pred_x.resize(h);
        r.pred_v.assign(h, s.pred->vel);
        double px = s.pred->pos;
        for (std::size_t k = 0; k < h; ++k) {
            px += cfg.dt * s.pred->vel;
            r.pred_x[k] = px;
        }
    }
    return r;
}

double forward_distance(const PerceivedState& s, const VehiclePair& pair) {
    require(s.pred.has_value(), "no predecessor");
    const double d = s.pred->pos - s.self_pos;
    return pair.circumference > 0.0 ? wrap_position(d, pair.circumference) : d;
}

double effective_utility(double a, const PerceivedState& s, const UtilityParams& p,
                         const AnticipationConfig& cfg, const VehiclePair& pair) {
    // Same kinematics as anticipate(), evaluated relative to the ego start so
    // no rollout buffers are needed on the hot path.
    const double dt = cfg.dt;
    double speed_term = 0.0;
    double worst = 0.0;
    double ego_x = 0.0;
    double ego_v = s.self_vel;
    double pred_x = 0.0;
    double pred_v = 0.0;
    const bool has_pred = s.pred.has_value();
    if (has_pred) {
        pred_x = forward_distance(s, pair);
        pred_v = s.pred->vel;
    }
    const double half_lengths = 0.5 * (pair.length_pred + pair.length_self);
    for (int k = 1; k <= cfg.h; ++k) {
        ego_x += dt * ego_v;
        ego_v = s.self_vel + k * dt * a;
        if (k == 1 || cfg.speed_reward == SpeedRewardMode::HorizonAverage) speed_term += phi1(ego_v, p);
        if (has_pred) {
            pred_x += dt * pred_v;
            const double gap = pred_x - ego_x - half_lengths;
            worst = std::max(worst, phi2(gap, front_scale(ego_v, pred_v, p)));
        }
    }
    if (cfg.speed_reward == SpeedRewardMode::HorizonAverage) speed_term /= cfg.h;
    return p.omega1 * speed_term + p.omega2 * worst;
}

}  // namespace ringcal
