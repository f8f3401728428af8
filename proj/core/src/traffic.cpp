#include "highway/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace highway {

VehicleState bicycle_step(const VehicleState& state, double accel, double steer,
                          double dt, const VehicleGeometry& geom) {
    if (!(dt > 0.0)) throw std::invalid_argument("bicycle_step: dt must be positive");
    if (!std::isfinite(accel) || !std::isfinite(steer) ||
        !std::isfinite(state.s) || !std::isfinite(state.y) ||
        !std::isfinite(state.psi) || !std::isfinite(state.v)) {
        throw std::invalid_argument("bicycle_step: non-finite input");
    }

    steer = std::clamp(steer, -kSteerMax, kSteerMax);

    const double slip = std::atan(geom.rear_axle * std::tan(steer) / geom.wheelbase());

    VehicleState next = state;
    next.s = state.s + state.v * std::cos(state.psi + slip) * dt;
    next.y = state.y + state.v * std::sin(state.psi + slip) * dt;
    next.psi = state.psi + (state.v / geom.rear_axle) * std::sin(slip) * dt;
    next.v = std::max(0.0, state.v + accel * dt);
    next.a = accel;
    return next;
}

bool bodies_overlap(const VehicleState& a, const VehicleState& b, const VehicleGeometry& geom) {
    return std::abs(a.s - b.s) < geom.length && std::abs(a.y - b.y) < geom.width;
}

CollisionReport check_collision(const VehicleState& ego, std::span<const VehicleState> others,
                                const VehicleGeometry& geom, const RoadGeometry& road) {
    for (std::size_t i = 0; i < others.size(); ++i) {
        if (bodies_overlap(ego, others[i], geom)) {
            return {CollisionReport::Kind::vehicle, static_cast<int>(i)};
        }
    }
    const double half_width = 0.5 * geom.width;
    if (ego.y - half_width < 0.0 || ego.y + half_width > road.width()) {
        return {CollisionReport::Kind::road_departure, -1};
    }
    return {};
}

}  // namespace highway
