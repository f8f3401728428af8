#pragma once

#include <optional>

#include "highway/traffic.hpp"

namespace highway {

// IDM + MOBIL parameter bundle for one driver.
struct DriverProfile {
    double v_set;    // desired speed, m/s
    double t_set;    // desired time gap, s
    double d0;       // minimum gap, m
    double a_max;    // maximal acceleration, m/s^2
    double b;        // desired deceleration, m/s^2
    double delta;    // IDM free-acceleration exponent
    double p;        // politeness, new (side) follower
    double q;        // politeness, old (rear) follower
    double a_th;     // lane-change incentive threshold, m/s^2
    double b_safe;   // follower deceleration bound, m/s^2
};

DriverProfile normal_driver();
DriverProfile timid_driver();
DriverProfile aggressive_driver();

struct LeaderView {
    double gap;          // bumper-to-bumper, must be > 0
    double speed_delta;  // subject speed minus leader speed
};

struct FollowerView {
    double gap;      // bumper-to-bumper to the subject, >= 0
    double speed;    // m/s
    DriverProfile profile;  // parameters governing the follower's response
};

struct LaneView {
    bool exists = false;
    bool blocked = false;  // a body overlaps the subject longitudinally; lane not enterable
    std::optional<LeaderView> leader;
    std::optional<FollowerView> follower;
};

struct MobilView {
    LaneView current;
    LaneView left;
    LaneView right;
    double vehicle_length = 5.0;  // used to chain bumper-to-bumper gaps across a slot
};

enum class LaneChange { keep, left, right };

// Eq.-style IDM acceleration, clamped to [-kHardBrake, a_max]. The desired-gap
// term is dropped when no leader is present; d* floors at zero before squaring.
// Throws if a leader is reported at a non-positive gap.
double idm_acceleration(double v, const std::optional<LeaderView>& leader,
                        const DriverProfile& profile);

// MOBIL lane-change decision: per adjacent lane, a follower-safety gate
// (induced deceleration within b_safe) then the politeness-weighted incentive
// test. Largest surplus wins; exact tie goes left.
LaneChange mobil_decision(double v, const DriverProfile& profile, const MobilView& view);

struct SteeringGains {
    double k_y = 0.075;  // lateral error gain, rad/m
    double k_psi = 1.5;  // heading gain
};

// Proportional-plus-heading lane tracking. Completes a 3.75 m lane change at
// 20 m/s in about 3.4 s without overshoot.
double lateral_steering(const VehicleState& state, int target_lane,
                        const RoadGeometry& road, const SteeringGains& gains = {});

bool maneuver_complete(const VehicleState& state, int target_lane, const RoadGeometry& road);

}  // namespace highway
