#include "highway/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace highway {

namespace {

constexpr double kMinIdmGap = 0.01;  // floor fed to IDM in near-touch states

DriverProfile profile_for_mode(ScenarioConfig::ProfileMode mode, Rng& rng) {
    if (mode == ScenarioConfig::ProfileMode::all_normal) return normal_driver();
    switch (rng.uniform_int(0, 2)) {
        case 0: return normal_driver();
        case 1: return timid_driver();
        default: return aggressive_driver();
    }
}

}  // namespace

ScenarioConfig ScenarioConfig::benchmark_a() {
    ScenarioConfig c;
    c.lane_count_min = 3;
    c.lane_count_max = 3;
    c.vehicle_count = 9;  // ego + 8 normal-behavior vehicles
    c.profile_mode = ProfileMode::all_normal;
    c.noise_enabled = false;
    return c;
}

ScenarioConfig ScenarioConfig::benchmark_b() {
    ScenarioConfig c;
    c.lane_count_min = 3;
    c.lane_count_max = 4;
    c.vehicle_count = 21;  // ego + 20 vehicles with mixed behaviors
    c.profile_mode = ProfileMode::uniform_random;
    c.noise_enabled = true;
    return c;
}

ObservationSpec ObservationSpec::make(const ScenarioConfig& config, ObservationMode mode) {
    ObservationSpec spec;
    spec.mode = mode;
    spec.slots = mode == ObservationMode::full ? 20 : 2 * config.lane_count_max;
    return spec;
}

double compute_reward(double v_current, double v_initial, double v_desired,
                      bool lane_change_executed, bool safety_violation,
                      EpisodeStatus status) {
    if (!(v_desired > 0.0)) throw std::invalid_argument("compute_reward: v_desired must be positive");
    if (status == EpisodeStatus::collided) return -100.0;
    if (status == EpisodeStatus::solved) return 100.0;
    double reward = (v_current - v_initial) / v_desired;
    if (lane_change_executed) reward -= 1.0;
    if (safety_violation) reward -= 1.0;
    return reward;
}

int apply_traffic_unlock(WorldState& world, double ego_desired_speed, int slow_streak,
                         const UnlockPolicy& policy, Rng& rng) {
    if (slow_streak < policy.required_streak) return -1;

    const double ego_s = world.ego().state.s;
    std::vector<int> blockers;
    std::vector<bool> lane_locked(static_cast<std::size_t>(world.road.lane_count), false);
    for (std::size_t i = 1; i < world.vehicles.size(); ++i) {
        const TrafficVehicle& v = world.vehicles[i];
        const double ahead = v.state.s - ego_s;
        if (ahead <= 0.0 || ahead > policy.scan_range) continue;
        if (v.profile.v_set >= ego_desired_speed) continue;
        lane_locked[static_cast<std::size_t>(v.state.lane(world.road))] = true;
        blockers.push_back(static_cast<int>(i));
    }
    if (!std::all_of(lane_locked.begin(), lane_locked.end(), [](bool b) { return b; })) {
        return -1;
    }

    const int pick = blockers[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(blockers.size()) - 1))];
    world.vehicles[static_cast<std::size_t>(pick)].profile.v_set =
        rng.uniform(ego_desired_speed, ego_desired_speed + policy.boost_span);
    return pick;
}

WorldState generate_scenario(const ScenarioConfig& config, Rng& rng) {
    WorldState world;
    world.road.lane_count = config.lane_count_min == config.lane_count_max
                                ? config.lane_count_min
                                : rng.uniform_int(config.lane_count_min, config.lane_count_max);
    world.road.lane_width = config.lane_width;
    world.road.episode_length = config.episode_length;

    const int lanes = world.road.lane_count;

    TrafficVehicle ego;
    ego.state.s = 0.0;
    ego.state.y = world.road.lane_center(rng.uniform_int(0, lanes - 1));
    ego.state.v = rng.uniform(config.ego_speed_min, config.ego_speed_max);
    ego.profile = normal_driver();
    ego.profile.v_set = config.ego_desired_speed;
    world.vehicles.push_back(ego);

    const int ego_lane = ego.state.lane(world.road);

    // Slow blocker ahead in the ego's lane, always present.
    {
        TrafficVehicle blocker;
        blocker.state.s = rng.uniform(config.blocker_ahead_min, config.blocker_ahead_max);
        blocker.state.y = world.road.lane_center(ego_lane);
        blocker.state.v = rng.uniform(config.front_speed_min, config.front_speed_max);
        blocker.profile = profile_for_mode(config.profile_mode, rng);
        blocker.profile.v_set = rng.uniform(config.blocker_desired_min, config.blocker_desired_max);
        world.vehicles.push_back(blocker);
    }

    const int remaining = config.vehicle_count - 2;
    for (int k = 0; k < remaining; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const int lane = rng.uniform_int(0, lanes - 1);
            const double s = rng.uniform(-config.initial_spread, config.initial_spread);
            bool clear = true;
            for (const TrafficVehicle& other : world.vehicles) {
                if (other.state.lane(world.road) != lane) continue;
                if (std::abs(other.state.s - s) < config.min_spawn_distance) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;

            TrafficVehicle v;
            v.state.s = s;
            v.state.y = world.road.lane_center(lane);
            v.state.v = s > 0.0 ? rng.uniform(config.front_speed_min, config.front_speed_max)
                                : rng.uniform(config.rear_speed_min, config.rear_speed_max);
            v.profile = profile_for_mode(config.profile_mode, rng);
            v.profile.v_set = rng.uniform(config.other_desired_min, config.other_desired_max);
            world.vehicles.push_back(v);
            placed = true;
        }
        if (!placed) {
            throw GenerationError("generate_scenario: could not place vehicle " +
                                  std::to_string(k + 2) + " of " +
                                  std::to_string(config.vehicle_count));
        }
    }
    return world;
}

HighwayEnv::HighwayEnv(ScenarioConfig config, ObservationSpec obs_spec,
                       std::optional<BlindSpotWindow> safety, std::uint64_t seed)
    : config_(config), obs_spec_(obs_spec), safety_(safety), rng_(seed) {}

Observation HighwayEnv::reset() {
    world_ = generate_scenario(config_, rng_);
    status_ = EpisodeStatus::running;
    initial_speed_ = world_.ego().state.v;
    steps_ = 0;
    lane_changes_ = 0;
    safety_violations_ = 0;
    slow_streak_ = 0;
    last_collision_ = {};
    return observe();
}

bool HighwayEnv::occupies_lane(const VehicleState& v, int lane) const {
    if (v.lane(world_.road) == lane) return true;
    return v.changing() && v.target_lane == lane;
}

std::optional<HighwayEnv::Neighbor> HighwayEnv::nearest_leader(int subject, int lane) const {
    const double s0 = world_.vehicles[static_cast<std::size_t>(subject)].state.s;
    Neighbor best;
    double best_ds = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < world_.vehicles.size(); ++i) {
        if (static_cast<int>(i) == subject) continue;
        const VehicleState& other = world_.vehicles[i].state;
        if (!occupies_lane(other, lane)) continue;
        const double ds = other.s - s0;
        if (ds > 0.0 && ds < best_ds) {
            best_ds = ds;
            best.index = static_cast<int>(i);
        }
    }
    if (best.index < 0) return std::nullopt;
    best.gap = best_ds - world_.geometry.length;
    return best;
}

std::optional<HighwayEnv::Neighbor> HighwayEnv::nearest_follower(int subject, int lane) const {
    const double s0 = world_.vehicles[static_cast<std::size_t>(subject)].state.s;
    Neighbor best;
    double best_ds = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < world_.vehicles.size(); ++i) {
        if (static_cast<int>(i) == subject) continue;
        const VehicleState& other = world_.vehicles[i].state;
        if (!occupies_lane(other, lane)) continue;
        const double ds = s0 - other.s;
        if (ds > 0.0 && ds < best_ds) {
            best_ds = ds;
            best.index = static_cast<int>(i);
        }
    }
    if (best.index < 0) return std::nullopt;
    best.gap = best_ds - world_.geometry.length;
    return best;
}

std::optional<LeaderView> HighwayEnv::idm_leader(int subject) const {
    const VehicleState& state = world_.vehicles[static_cast<std::size_t>(subject)].state;
    std::optional<Neighbor> best;
    auto consider = [&](int lane) {
        auto n = nearest_leader(subject, lane);
        if (n && (!best || n->gap < best->gap)) best = n;
    };
    consider(state.lane(world_.road));
    if (state.changing() && state.target_lane >= 0 && state.target_lane < world_.road.lane_count &&
        state.target_lane != state.lane(world_.road)) {
        consider(state.target_lane);
    }
    if (!best) return std::nullopt;
    const VehicleState& leader = world_.vehicles[static_cast<std::size_t>(best->index)].state;
    return LeaderView{std::max(kMinIdmGap, best->gap), state.v - leader.v};
}

LaneView HighwayEnv::build_lane_view(int subject, int lane, bool assume_normal_followers,
                                     bool with_noise) {
    LaneView view;
    if (lane < 0 || lane >= world_.road.lane_count) return view;
    view.exists = true;

    const VehicleState& me = world_.vehicles[static_cast<std::size_t>(subject)].state;
    for (std::size_t i = 0; i < world_.vehicles.size(); ++i) {
        if (static_cast<int>(i) == subject) continue;
        const VehicleState& other = world_.vehicles[i].state;
        if (!occupies_lane(other, lane)) continue;
        if (std::abs(other.s - me.s) < world_.geometry.length) {
            view.blocked = true;
            return view;
        }
    }

    if (auto leader = nearest_leader(subject, lane)) {
        const VehicleState& lv = world_.vehicles[static_cast<std::size_t>(leader->index)].state;
        double gap = leader->gap;
        double delta = me.v - lv.v;
        if (with_noise) {
            gap += rng_.normal(0.0, config_.noise_pos_sigma);
            delta += rng_.normal(0.0, config_.noise_vel_sigma);
        }
        view.leader = LeaderView{std::max(kMinIdmGap, gap), delta};
    }
    if (auto follower = nearest_follower(subject, lane)) {
        const TrafficVehicle& fv = world_.vehicles[static_cast<std::size_t>(follower->index)];
        double gap = follower->gap;
        double speed = fv.state.v;
        if (with_noise) {
            gap += rng_.normal(0.0, config_.noise_pos_sigma);
            speed += rng_.normal(0.0, config_.noise_vel_sigma);
        }
        view.follower = FollowerView{std::max(kMinIdmGap, gap), std::max(0.0, speed),
                                     assume_normal_followers ? normal_driver() : fv.profile};
    }
    return view;
}

MobilView HighwayEnv::build_view(int subject, bool assume_normal_followers, bool with_noise) {
    const VehicleState& me = world_.vehicles[static_cast<std::size_t>(subject)].state;
    const int lane = me.lane(world_.road);
    MobilView view;
    view.vehicle_length = world_.geometry.length;
    view.current = build_lane_view(subject, lane, assume_normal_followers, with_noise);
    view.left = build_lane_view(subject, lane + 1, assume_normal_followers, with_noise);
    view.right = build_lane_view(subject, lane - 1, assume_normal_followers, with_noise);
    return view;
}

MobilView HighwayEnv::ego_view() {
    return build_view(0, /*assume_normal_followers=*/true,
                      /*with_noise=*/config_.noise_enabled);
}

void HighwayEnv::simulate_substep(bool decision_substep) {
    auto& vehicles = world_.vehicles;
    const int n = static_cast<int>(vehicles.size());

    if (decision_substep) {
        // Background lane decisions at the 1 Hz cadence; a vehicle that commits
        // immediately counts as occupying its target lane for later deciders.
        for (int i = 1; i < n; ++i) {
            VehicleState& state = vehicles[static_cast<std::size_t>(i)].state;
            if (state.changing()) continue;
            const MobilView view = build_view(i, false, false);
            const LaneChange change =
                mobil_decision(state.v, vehicles[static_cast<std::size_t>(i)].profile, view);
            if (change == LaneChange::keep) continue;
            const int target = state.lane(world_.road) + (change == LaneChange::left ? 1 : -1);
            state.maneuver =
                change == LaneChange::left ? Maneuver::changing_left : Maneuver::changing_right;
            state.target_lane = target;
        }
    }

    std::vector<double> accel(static_cast<std::size_t>(n));
    std::vector<double> steer(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const TrafficVehicle& v = vehicles[static_cast<std::size_t>(i)];
        accel[static_cast<std::size_t>(i)] = idm_acceleration(v.state.v, idm_leader(i), v.profile);
        const int target = v.state.changing() ? v.state.target_lane : v.state.lane(world_.road);
        steer[static_cast<std::size_t>(i)] = lateral_steering(v.state, target, world_.road);
    }
    for (int i = 0; i < n; ++i) {
        VehicleState& state = vehicles[static_cast<std::size_t>(i)].state;
        state = bicycle_step(state, accel[static_cast<std::size_t>(i)],
                             steer[static_cast<std::size_t>(i)], kPhysicsDt, world_.geometry);
        if (state.changing() && state.target_lane >= 0 &&
            state.target_lane < world_.road.lane_count &&
            maneuver_complete(state, state.target_lane, world_.road)) {
            state.maneuver = Maneuver::none;
            state.target_lane = -1;
        }
    }
}

void HighwayEnv::check_ego_collision() {
    const VehicleState& ego = world_.ego().state;
    std::vector<VehicleState> others;
    others.reserve(world_.vehicles.size() - 1);
    for (std::size_t i = 1; i < world_.vehicles.size(); ++i) {
        others.push_back(world_.vehicles[i].state);
    }
    CollisionReport report = check_collision(ego, others, world_.geometry, world_.road);
    if (report.collision()) {
        if (report.kind == CollisionReport::Kind::vehicle) {
            report.other_index += 1;  // others[] starts at world vehicle 1
        }
        last_collision_ = report;
        status_ = EpisodeStatus::collided;
    }
}

StepResult HighwayEnv::step(Action requested) {
    if (status_ != EpisodeStatus::running) {
        throw std::logic_error("HighwayEnv::step: episode is not running");
    }

    TrafficVehicle& ego = world_.ego();

    if (ego.state.v < config_.ego_desired_speed - 2.0) {
        ++slow_streak_;
    } else {
        slow_streak_ = 0;
    }
    apply_traffic_unlock(world_, config_.ego_desired_speed, slow_streak_, UnlockPolicy{}, rng_);

    StepResult result;
    result.info.requested = requested;

    // Maneuvers are atomic: mid-change requests fall back to keep_lane, unpenalized.
    Action considered = requested;
    if (ego.state.changing() && requested != Action::keep_lane) {
        considered = Action::keep_lane;
    }

    Action executed = considered;
    if (safety_ && !ego.state.changing()) {
        const SafetyVerdict verdict = evaluate_action(world_, considered, *safety_);
        executed = verdict.executed;
        if (!verdict.safe) {
            result.info.safety_violation = true;
            ++safety_violations_;
        }
    }
    result.info.executed = executed;

    if (executed != Action::keep_lane) {
        // Without the safety layer the target may not exist; the ego then
        // steers off the road and the departure terminates the episode.
        const int target =
            ego.state.lane(world_.road) + (executed == Action::change_left ? 1 : -1);
        ego.state.maneuver = executed == Action::change_left ? Maneuver::changing_left
                                                             : Maneuver::changing_right;
        ego.state.target_lane = target;
        result.info.lane_change_initiated = true;
        ++lane_changes_;
    }

    for (int sub = 0; sub < kSubstepsPerDecision; ++sub) {
        simulate_substep(sub == 0);
        check_ego_collision();
        if (status_ != EpisodeStatus::running) break;
    }
    ++steps_;

    if (status_ == EpisodeStatus::running) {
        if (ego.state.v >= config_.ego_desired_speed - config_.solved_tolerance) {
            status_ = EpisodeStatus::solved;
        } else if (ego.state.s >= config_.episode_length) {
            status_ = EpisodeStatus::truncated;
        }
    }

    result.status = status_;
    result.collision = last_collision_;
    result.reward = compute_reward(ego.state.v, initial_speed_, config_.ego_desired_speed,
                                   result.info.lane_change_initiated,
                                   result.info.safety_violation, status_);
    result.info.lane_changes = lane_changes_;
    result.info.safety_violations = safety_violations_;
    result.info.distance = ego.state.s;
    result.observation = observe();
    return result;
}

Observation HighwayEnv::observe() {
    const VehicleState& ego = world_.ego().state;
    const double y_max = world_.road.width();
    Observation obs(static_cast<std::size_t>(obs_spec_.size()),
                    0.0f);

    auto clamped = [](double x) {
        return static_cast<float>(std::clamp(x, -1.0, 1.0));
    };

    obs[0] = clamped(ego.v / config_.ego_desired_speed);
    obs[1] = clamped(ego.y / y_max);

    struct Slot {
        bool present = false;
        double rel_s = 0.0, rel_v = 0.0, rel_y = 0.0;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(obs_spec_.slots));

    if (obs_spec_.mode == ObservationMode::full) {
        std::vector<int> order;
        for (std::size_t i = 1; i < world_.vehicles.size(); ++i) {
            order.push_back(static_cast<int>(i));
        }
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double da = std::abs(world_.vehicles[static_cast<std::size_t>(a)].state.s - ego.s);
            const double db = std::abs(world_.vehicles[static_cast<std::size_t>(b)].state.s - ego.s);
            if (da != db) return da < db;
            return a < b;
        });
        const std::size_t fill = std::min(order.size(), slots.size());
        for (std::size_t k = 0; k < fill; ++k) {
            const VehicleState& other =
                world_.vehicles[static_cast<std::size_t>(order[k])].state;
            slots[k] = {true, other.s - ego.s, other.v - ego.v, other.y - ego.y};
        }
    } else {
        const int lanes = world_.road.lane_count;
        for (int lane = 0; lane < obs_spec_.slots / 2; ++lane) {
            if (lane >= lanes) continue;
            int leader = -1, follower = -1;
            double leader_ds = std::numeric_limits<double>::infinity();
            double follower_ds = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < world_.vehicles.size(); ++i) {
                const VehicleState& other = world_.vehicles[i].state;
                if (other.lane(world_.road) != lane) continue;
                const double ds = other.s - ego.s;
                if (ds > 0.0 && ds < leader_ds) {
                    leader_ds = ds;
                    leader = static_cast<int>(i);
                } else if (ds <= 0.0 && -ds < follower_ds) {
                    follower_ds = -ds;
                    follower = static_cast<int>(i);
                }
            }
            auto fill = [&](std::size_t slot, int index) {
                if (index < 0) return;
                const VehicleState& other =
                    world_.vehicles[static_cast<std::size_t>(index)].state;
                slots[slot] = {true, other.s - ego.s, other.v - ego.v, other.y - ego.y};
            };
            fill(static_cast<std::size_t>(2 * lane), leader);
            fill(static_cast<std::size_t>(2 * lane + 1), follower);
        }
    }

    for (std::size_t k = 0; k < slots.size(); ++k) {
        float* out = &obs[2 + 3 * k];
        if (!slots[k].present) {
            out[0] = kPadRelPos;
            out[1] = kPadRelVel;
            out[2] = kPadRelLat;
            continue;
        }
        double rel_s = slots[k].rel_s;
        double rel_v = slots[k].rel_v;
        if (config_.noise_enabled) {
            rel_s += rng_.normal(0.0, config_.noise_pos_sigma);
            rel_v += rng_.normal(0.0, config_.noise_vel_sigma);
        }
        out[0] = clamped(rel_s / obs_spec_.sensor_range);
        out[1] = clamped(rel_v / obs_spec_.speed_scale);
        out[2] = clamped(slots[k].rel_y / y_max);
    }
    return obs;
}

}  // namespace highway
