#pragma once

#include "highway/world.hpp"

namespace highway {

// Longitudinal occupancy window checked in the target lane before a change,
// measured from the ego's bumpers.
struct BlindSpotWindow {
    double rear_extent = 12.0;   // m behind the ego's rear bumper
    double front_extent = 8.0;   // m ahead of the ego's front bumper
};

struct SafetyVerdict {
    enum class Reason { none, off_road, blind_spot_occupied };

    bool safe = true;
    Reason reason = Reason::none;
    Action executed = Action::keep_lane;
};

// Vetoes lane changes toward a nonexistent lane or into an occupied blind-spot
// window; everything else (and always keep_lane) passes through unchanged.
// Callers must have coerced mid-maneuver requests to keep_lane already.
SafetyVerdict evaluate_action(const WorldState& world, Action requested,
                              const BlindSpotWindow& window);

}  // namespace highway
