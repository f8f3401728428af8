#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace highway {

struct RoadGeometry {
    int lane_count = 3;            // 3 or 4
    double lane_width = 3.75;      // m
    double episode_length = 5000.0;  // d_max, m

    double width() const { return lane_count * lane_width; }
    double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
    int lane_of(double y) const {
        const int lane = static_cast<int>(std::floor(y / lane_width));
        return std::clamp(lane, 0, lane_count - 1);
    }
};

struct VehicleGeometry {
    double length = 5.0;   // m
    double width = 2.0;    // m
    double front_axle = 1.4;  // l_f, CG to front axle
    double rear_axle = 1.4;   // l_r, CG to rear axle

    double wheelbase() const { return front_axle + rear_axle; }
};

enum class Maneuver { none, changing_left, changing_right };

struct VehicleState {
    double s = 0.0;    // longitudinal position, m
    double y = 0.0;    // lateral position, m (0 = right road edge)
    double psi = 0.0;  // heading, rad
    double v = 0.0;    // speed, m/s, never negative
    double a = 0.0;    // longitudinal acceleration applied last step
    Maneuver maneuver = Maneuver::none;
    int target_lane = -1;

    int lane(const RoadGeometry& road) const { return road.lane_of(y); }
    bool changing() const { return maneuver != Maneuver::none; }
};

inline constexpr double kSteerMax = 0.3;   // rad, bicycle-model validity clamp
inline constexpr double kHardBrake = 9.0;  // m/s^2, physical brake limit

// One explicit-Euler step of the kinematic bicycle model. Steering is clamped
// to +-kSteerMax, speed floors at zero. Throws on non-finite inputs.
VehicleState bicycle_step(const VehicleState& state, double accel, double steer,
                          double dt, const VehicleGeometry& geom);

struct CollisionReport {
    enum class Kind { none, vehicle, road_departure };
    Kind kind = Kind::none;
    int other_index = -1;

    bool collision() const { return kind != Kind::none; }
};

// Axis-aligned body overlap; headings stay below ~6 deg during lane changes so
// an oriented-box refinement would not change outcomes.
bool bodies_overlap(const VehicleState& a, const VehicleState& b, const VehicleGeometry& geom);

CollisionReport check_collision(const VehicleState& ego, std::span<const VehicleState> others,
                                const VehicleGeometry& geom, const RoadGeometry& road);

}  // namespace highway
