#pragma once

#include <optional>
#include <span>

#include "highway/net.hpp"
#include "highway/replay.hpp"
#include "highway/world.hpp"

namespace highway {

struct HyperParams {
    double gamma = 0.99;
    int n_step = 2;
    std::size_t replay_capacity = 50000;
    int target_sync_every = 500;
    double learning_rate = 1e-4;
    int batch_size = 32;
    double priority_exponent = 0.6;  // omega on stored priorities
    double priority_floor = 1e-6;    // epsilon_p
    double is_beta_start = 0.4;
    long beta_anneal_steps = 100000;
    int train_start = 1000;  // environment steps before updates begin
    int train_every = 1;
    double grad_clip = 10.0;

    // epsilon-greedy schedule, double-DQN baseline only
    double eps_start = 1.0;
    double eps_final = 0.05;
    long eps_anneal_steps = 100000;
};

// Categorical Bellman backup: every atom z_j maps to
// clamp(reward + discount * z_j, v_min, v_max) and its probability splits
// linearly between the neighboring atoms of the image.
template <class S>
void project_distribution(double n_step_reward, double discount_to_bootstrap,
                          std::span<const S> next_probs, std::span<const S> support,
                          std::span<S> out);

extern template void project_distribution<float>(double, double, std::span<const float>,
                                                 std::span<const float>, std::span<float>);
extern template void project_distribution<double>(double, double, std::span<const double>,
                                                  std::span<const double>, std::span<double>);

struct TrainStats {
    double mean_loss = 0.0;
    double grad_norm = 0.0;
};

class RainbowAgent {
public:
    RainbowAgent(const NetworkConfig& net_config, const HyperParams& hyper, std::uint64_t seed);

    Action select_action(const Observation& obs, bool train_mode);

    // Feeds one environment step into the n-step assembler and replay buffer.
    void record(const Observation& obs, Action action, double reward,
                const Observation& next_obs, EpisodeStatus status);

    // Runs a training update when warmup and cadence allow.
    std::optional<TrainStats> maybe_train();
    TrainStats train_step();

    long env_steps() const { return env_steps_; }
    long train_steps() const { return train_steps_; }
    const HyperParams& hyper() const { return hyper_; }
    const NetworkConfig& net_config() const { return online_.config(); }

    DistributionalNet<float>& online() { return online_; }
    DistributionalNet<float>& target() { return target_; }
    AdamState<float>& adam() { return adam_; }
    ReplayBuffer& buffer() { return buffer_; }
    void set_counters(long env_steps, long train_steps);

    // Per-action atom probabilities and expected values with noise zeroed.
    void q_distribution(const Observation& obs, std::vector<float>& probs,
                        std::vector<double>& q_values);

private:
    HyperParams hyper_;
    DistributionalNet<float> online_;
    DistributionalNet<float> target_;
    AdamState<float> adam_;
    ReplayBuffer buffer_;
    NStepAssembler assembler_;
    Rng noise_rng_;
    Rng sample_rng_;
    long env_steps_ = 0;
    long train_steps_ = 0;
    std::vector<Transition> emitted_;
    std::vector<float> probs_scratch_;
    std::vector<float> target_scratch_;
    std::vector<double> q_scratch_;
};

class DoubleDqnAgent {
public:
    DoubleDqnAgent(const NetworkConfig& net_config, const HyperParams& hyper,
                   std::uint64_t seed);

    Action select_action(const Observation& obs, bool train_mode);
    void record(const Observation& obs, Action action, double reward,
                const Observation& next_obs, EpisodeStatus status);
    std::optional<TrainStats> maybe_train();
    TrainStats train_step();

    double epsilon() const;
    long env_steps() const { return env_steps_; }
    long train_steps() const { return train_steps_; }
    const HyperParams& hyper() const { return hyper_; }
    const NetworkConfig& net_config() const { return online_.config(); }

    ScalarNet<float>& online() { return online_; }
    ScalarNet<float>& target() { return target_; }
    AdamState<float>& adam() { return adam_; }
    void set_counters(long env_steps, long train_steps);

private:
    HyperParams hyper_;
    ScalarNet<float> online_;
    ScalarNet<float> target_;
    AdamState<float> adam_;
    ReplayBuffer buffer_;  // exponent 0 = uniform replay
    NStepAssembler assembler_;
    Rng explore_rng_;
    Rng sample_rng_;
    long env_steps_ = 0;
    long train_steps_ = 0;
    std::vector<Transition> emitted_;
    std::vector<double> q_scratch_;
};

}  // namespace highway
