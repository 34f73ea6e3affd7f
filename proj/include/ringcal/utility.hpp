#pragma once

#include "ringcal/state.hpp"
#include "ringcal/types.hpp"

#include <vector>

namespace ringcal {

/// Shape and weight parameters of the two-component driving utility.
struct UtilityParams {
    double kappa1 = 0.7;     // speed-tolerance shape
    double v_star = 10.26;   // ideal speed, m/s
    double kappa_c = 0.4;    // constant headway scale, m
    double kappa_v = 0.215;  // speed-proportional headway scale, s
    double kappa_d = 1.0;    // closing-speed headway scale, s
    double omega1 = 1.0;
    double omega2 = -10.0;

    void validate() const;
};

/// How the speed reward is aggregated over the look-ahead.
enum class SpeedRewardMode {
    NextStep,        // reward of the first anticipated speed only
    HorizonAverage,  // mean reward over all h anticipated speeds
};

struct AnticipationConfig {
    int h = 4;
    double dt = 1.0 / 3.0;
    SpeedRewardMode speed_reward = SpeedRewardMode::NextStep;

    double horizon() const { return h * dt; }
    void validate() const;
};

/// Lengths of the ego vehicle and its predecessor plus the ring circumference
/// used to resolve the forward distance. circumference <= 0 means an open line.
struct VehiclePair {
    double length_self = 4.3;
    double length_pred = 4.3;
    double circumference = 0.0;
};

struct AnticipatedRollout {
    std::vector<double> ego_x, ego_v;
    std::vector<double> pred_x, pred_v;
};

/// Moving-forward reward at speed v.
double phi1(double v, const UtilityParams& params);

/// Speed-dependent headway scale sigma = kc + kv |v_self| + kd max(v_self - v_pred, 0).
double front_scale(double v_self, double v_pred, const UtilityParams& params);

/// Front-collision penalty magnitude in [0, 1] for a bumper-to-bumper gap.
double phi2(double gap, double sigma);

/// Roll the ego forward for h steps with the candidate acceleration held
/// constant while the predecessor keeps its speed. Positions stay on the
/// unwrapped line; the predecessor starts at s.pred->pos as given.
AnticipatedRollout anticipate(const PerceivedState& s, double a_candidate, const AnticipationConfig& cfg);

/// Forward centre-to-centre distance from self to predecessor, resolved on the
/// ring when the pair carries a circumference.
double forward_distance(const PerceivedState& s, const VehiclePair& pair);

/// Effective utility of holding acceleration `a_candidate` over the
/// anticipation horizon: speed reward of the first anticipated speed plus the
/// worst collision penalty along the rollout.
double effective_utility(double a_candidate, const PerceivedState& s, const UtilityParams& params,
                         const AnticipationConfig& cfg, const VehiclePair& pair);

}  // namespace ringcal
