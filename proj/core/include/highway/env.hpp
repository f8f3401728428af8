#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "highway/rng.hpp"
#include "highway/safety.hpp"
#include "highway/world.hpp"

namespace highway {

struct ScenarioConfig {
    int lane_count_min = 3;
    int lane_count_max = 3;
    int vehicle_count = 9;             // total, ego included
    double lane_width = 3.75;
    double initial_spread = 200.0;     // d_long, m around the ego
    double min_spawn_distance = 25.0;  // same-lane center-to-center spacing floor
    double rear_speed_min = 15.0, rear_speed_max = 25.0;
    double front_speed_min = 10.0, front_speed_max = 18.0;
    double ego_speed_min = 10.0, ego_speed_max = 15.0;
    double other_desired_min = 18.0, other_desired_max = 26.0;
    double ego_desired_speed = 25.0;   // v_d_ego
    double episode_length = 5000.0;    // d_max
    double solved_tolerance = 0.1;     // epsilon_v on reaching the desired speed

    enum class ProfileMode { all_normal, uniform_random };
    ProfileMode profile_mode = ProfileMode::all_normal;

    // Behavior-parameter table; desired speeds are drawn separately above.
    DriverProfile normal_profile = normal_driver();
    DriverProfile timid_profile = timid_driver();
    DriverProfile aggressive_profile = aggressive_driver();

    // The ego follows normal parameters unless a rule-based baseline drives it;
    // its v_set is always forced to ego_desired_speed.
    std::optional<DriverProfile> ego_profile;

    bool noise_enabled = false;
    double noise_pos_sigma = 0.5;  // m, on relative positions
    double noise_vel_sigma = 0.5;  // m/s, on relative velocities

    // The guaranteed slow vehicle ahead of the ego. Kept close enough that a
    // keep-lane-only policy can never reach the desired speed.
    double blocker_ahead_min = 30.0;
    double blocker_ahead_max = 90.0;
    double blocker_desired_min = 18.0;
    double blocker_desired_max = 22.0;

    static ScenarioConfig benchmark_a();
    static ScenarioConfig benchmark_b();
};

enum class ObservationMode { full, compact };

struct ObservationSpec {
    ObservationMode mode = ObservationMode::full;
    int slots = 20;              // full: nearest-N; compact: leader+follower per lane
    double sensor_range = 100.0; // ds_max, m
    double speed_scale = 40.0;   // v_max, m/s

    int size() const { return 2 + 3 * slots; }

    static ObservationSpec make(const ScenarioConfig& config, ObservationMode mode);
};

using Observation = std::vector<float>;

// Slot padding for absent vehicles: at sensor limit, matching speed, same line.
inline constexpr float kPadRelPos = 1.0f;
inline constexpr float kPadRelVel = 0.0f;
inline constexpr float kPadRelLat = 0.0f;

enum class EpisodeStatus { running, solved, collided, truncated };

struct StepInfo {
    bool safety_violation = false;
    Action requested = Action::keep_lane;
    Action executed = Action::keep_lane;
    bool lane_change_initiated = false;
    int lane_changes = 0;      // this episode so far
    int safety_violations = 0; // this episode so far
    double distance = 0.0;     // ego travel this episode, m
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    EpisodeStatus status = EpisodeStatus::running;
    StepInfo info;
    CollisionReport collision;
};

// Terminal statuses pay +-100 alone; otherwise the speed incentive relative to
// the episode's initial speed minus one per executed lane change and per
// safety violation.
double compute_reward(double v_current, double v_initial, double v_desired,
                      bool lane_change_executed, bool safety_violation,
                      EpisodeStatus status);

struct UnlockPolicy {
    double scan_range = 100.0;   // m ahead of the ego
    int required_streak = 10;    // consecutive slow decisions
    double speed_margin = 2.0;   // ego counts as slow below v_d - margin
    double boost_span = 2.0;     // raised desired speed drawn from [v_d, v_d + span]
};

// When every lane ahead of the ego is locked by slower traffic and the ego has
// been slow for the required streak, raises one uniformly chosen blocking
// vehicle's desired speed. Returns its index, or -1 when nothing was done.
int apply_traffic_unlock(WorldState& world, double ego_desired_speed, int slow_streak,
                         const UnlockPolicy& policy, Rng& rng);

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

WorldState generate_scenario(const ScenarioConfig& config, Rng& rng);

inline constexpr double kPhysicsDt = 0.1;
inline constexpr int kSubstepsPerDecision = 10;  // decision period 1 s

class HighwayEnv {
public:
    HighwayEnv(ScenarioConfig config, ObservationSpec obs_spec,
               std::optional<BlindSpotWindow> safety, std::uint64_t seed);

    // Generates a fresh scenario and returns the initial observation.
    Observation reset();

    // Advances one decision step (10 physics substeps). Throws if the episode
    // already finished.
    StepResult step(Action requested);

    bool episode_running() const { return status_ == EpisodeStatus::running; }
    EpisodeStatus status() const { return status_; }

    const WorldState& world() const { return world_; }
    WorldState& mutable_world() { return world_; }
    const ScenarioConfig& config() const { return config_; }
    const ObservationSpec& observation_spec() const { return obs_spec_; }
    bool safety_enabled() const { return safety_.has_value(); }
    const std::optional<BlindSpotWindow>& safety_window() const { return safety_; }
    double initial_speed() const { return initial_speed_; }
    int decision_steps() const { return steps_; }

    // Ego-centric MOBIL view for rule-based ego control. Measurement noise is
    // applied when the scenario has it enabled; follower behavior is assumed
    // normal since profiles are not observable.
    MobilView ego_view();

    // Builds the observation vector (consumes noise draws when enabled).
    Observation observe();

private:
    struct Neighbor {
        int index = -1;
        double gap = 0.0;  // bumper-to-bumper
    };

    bool occupies_lane(const VehicleState& v, int lane) const;
    std::optional<Neighbor> nearest_leader(int subject, int lane) const;
    std::optional<Neighbor> nearest_follower(int subject, int lane) const;
    std::optional<LeaderView> idm_leader(int subject) const;
    LaneView build_lane_view(int subject, int lane, bool assume_normal_followers,
                             bool with_noise);
    MobilView build_view(int subject, bool assume_normal_followers, bool with_noise);
    void simulate_substep(bool decision_substep);
    void check_ego_collision();

    ScenarioConfig config_;
    ObservationSpec obs_spec_;
    std::optional<BlindSpotWindow> safety_;
    Rng rng_;
    WorldState world_;
    EpisodeStatus status_ = EpisodeStatus::collided;  // invalid until reset()
    double initial_speed_ = 0.0;
    int steps_ = 0;
    int lane_changes_ = 0;
    int safety_violations_ = 0;
    int slow_streak_ = 0;
    CollisionReport last_collision_;
};

}  // namespace highway
