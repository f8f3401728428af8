#include "highway/driver.hpp"

#include <cmath>
#include <stdexcept>

namespace highway {

namespace {

// Table-of-drivers presets. delta and q are not part of the published table;
// delta=4 is the standard IDM value and q mirrors p (one politeness factor
// applied to both followers).
constexpr double kIdmDelta = 4.0;

}  // namespace

DriverProfile normal_driver() {
    return {25.0, 1.5, 2.0, 1.4, 2.0, kIdmDelta, 0.05, 0.05, 0.1, 2.0};
}

DriverProfile timid_driver() {
    return {19.4, 2.0, 4.0, 0.8, 1.0, kIdmDelta, 0.1, 0.1, 0.2, 1.0};
}

DriverProfile aggressive_driver() {
    return {30.6, 1.0, 0.0, 2.0, 3.0, kIdmDelta, 0.0, 0.0, 0.0, 3.0};
}

double idm_acceleration(double v, const std::optional<LeaderView>& leader,
                        const DriverProfile& profile) {
    if (v < 0.0 || !std::isfinite(v)) {
        throw std::invalid_argument("idm_acceleration: speed must be finite and non-negative");
    }
    double interaction = 0.0;
    if (leader) {
        if (!(leader->gap > 0.0)) {
            throw std::invalid_argument("idm_acceleration: leader gap must be positive");
        }
        const double desired_gap =
            std::max(0.0, profile.d0 + v * profile.t_set +
                              v * leader->speed_delta /
                                  (2.0 * std::sqrt(profile.b * profile.a_max)));
        const double ratio = desired_gap / leader->gap;
        interaction = ratio * ratio;
    }
    const double accel =
        profile.a_max * (1.0 - std::pow(v / profile.v_set, profile.delta) - interaction);
    return std::clamp(accel, -kHardBrake, profile.a_max);
}

namespace {

struct IncentiveResult {
    bool passes = false;
    double surplus = 0.0;
};

// Evaluates the safety gate and incentive for moving the subject into `target`.
IncentiveResult evaluate_direction(double v, const DriverProfile& profile,
                                   const LaneView& current, const LaneView& target,
                                   double vehicle_length) {
    if (!target.exists || target.blocked) return {};

    // Gate and incentive need every gap strictly positive; a zero gap means a
    // bumper touch, which the blocked flag should already have caught.
    if (target.leader && target.leader->gap <= 0.0) return {};
    if (target.follower && target.follower->gap <= 0.0) return {};

    const double a_subject = idm_acceleration(v, current.leader, profile);
    const double a_subject_after = idm_acceleration(v, target.leader, profile);

    double follower_term = 0.0;
    if (target.follower) {
        const FollowerView& nf = *target.follower;
        // Current response of the prospective follower: it still follows the
        // target lane's leader (if any), one slot further up.
        std::optional<LeaderView> nf_leader;
        if (target.leader) {
            nf_leader = LeaderView{nf.gap + vehicle_length + target.leader->gap,
                                   nf.speed - (v - target.leader->speed_delta)};
        }
        const double a_follower = idm_acceleration(nf.speed, nf_leader, nf.profile);
        const double a_follower_after =
            idm_acceleration(nf.speed, LeaderView{nf.gap, nf.speed - v}, nf.profile);

        if (a_follower_after < -profile.b_safe) return {};  // safety gate

        follower_term = profile.p * (a_follower_after - a_follower);
    }

    double old_follower_term = 0.0;
    if (current.follower) {
        const FollowerView& of = *current.follower;
        if (of.gap > 0.0) {
            const double a_old = idm_acceleration(of.speed, LeaderView{of.gap, of.speed - v},
                                                  of.profile);
            std::optional<LeaderView> of_leader_after;
            if (current.leader) {
                of_leader_after = LeaderView{of.gap + vehicle_length + current.leader->gap,
                                             of.speed - (v - current.leader->speed_delta)};
            }
            const double a_old_after = idm_acceleration(of.speed, of_leader_after, of.profile);
            old_follower_term = profile.q * (a_old_after - a_old);
        }
    }

    const double surplus =
        (a_subject_after - a_subject) + follower_term + old_follower_term - profile.a_th;
    return {surplus > 0.0, surplus};
}

}  // namespace

LaneChange mobil_decision(double v, const DriverProfile& profile, const MobilView& view) {
    const IncentiveResult left =
        evaluate_direction(v, profile, view.current, view.left, view.vehicle_length);
    const IncentiveResult right =
        evaluate_direction(v, profile, view.current, view.right, view.vehicle_length);

    if (left.passes && right.passes) {
        return right.surplus > left.surplus ? LaneChange::right : LaneChange::left;
    }
    if (left.passes) return LaneChange::left;
    if (right.passes) return LaneChange::right;
    return LaneChange::keep;
}

double lateral_steering(const VehicleState& state, int target_lane,
                        const RoadGeometry& road, const SteeringGains& gains) {
    const double offset = state.y - road.lane_center(target_lane);
    return std::clamp(-gains.k_y * offset - gains.k_psi * state.psi, -kSteerMax, kSteerMax);
}

bool maneuver_complete(const VehicleState& state, int target_lane, const RoadGeometry& road) {
    return std::abs(state.y - road.lane_center(target_lane)) < 0.1 &&
           std::abs(state.psi) < 0.01;
}

}  // namespace highway
