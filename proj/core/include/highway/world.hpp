#pragma once

#include <vector>

#include "highway/driver.hpp"
#include "highway/traffic.hpp"

namespace highway {

enum class Action { keep_lane = 0, change_left = 1, change_right = 2 };
inline constexpr int kActionCount = 3;

struct TrafficVehicle {
    VehicleState state;
    DriverProfile profile;
};

// Snapshot of the simulated highway. Index 0 is always the ego vehicle.
struct WorldState {
    RoadGeometry road;
    VehicleGeometry geometry;
    std::vector<TrafficVehicle> vehicles;

    TrafficVehicle& ego() { return vehicles.front(); }
    const TrafficVehicle& ego() const { return vehicles.front(); }
};

}  // namespace highway
