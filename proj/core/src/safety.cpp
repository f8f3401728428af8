#include "highway/safety.hpp"

#include <cmath>

namespace highway {

SafetyVerdict evaluate_action(const WorldState& world, Action requested,
                              const BlindSpotWindow& window) {
    if (requested == Action::keep_lane) {
        return {true, SafetyVerdict::Reason::none, Action::keep_lane};
    }

    const TrafficVehicle& ego = world.ego();
    const int ego_lane = ego.state.lane(world.road);
    const int target_lane = ego_lane + (requested == Action::change_left ? 1 : -1);

    if (target_lane < 0 || target_lane >= world.road.lane_count) {
        return {false, SafetyVerdict::Reason::off_road, Action::keep_lane};
    }

    const double half_length = 0.5 * world.geometry.length;
    const double half_width = 0.5 * world.geometry.width;
    const double window_rear = ego.state.s - half_length - window.rear_extent;
    const double window_front = ego.state.s + half_length + window.front_extent;
    const double lane_low = target_lane * world.road.lane_width;
    const double lane_high = lane_low + world.road.lane_width;

    for (std::size_t i = 1; i < world.vehicles.size(); ++i) {
        const VehicleState& other = world.vehicles[i].state;
        // Occupancy is body-based on both axes, so a vehicle straddling the
        // lane edge mid-change still counts.
        if (other.y + half_width <= lane_low || other.y - half_width >= lane_high) continue;
        if (other.s + half_length >= window_rear && other.s - half_length <= window_front) {
            return {false, SafetyVerdict::Reason::blind_spot_occupied, Action::keep_lane};
        }
    }
    return {true, SafetyVerdict::Reason::none, requested};
}

}  // namespace highway
