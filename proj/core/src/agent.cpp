#include "highway/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace highway {

template <class S>
void project_distribution(double n_step_reward, double discount_to_bootstrap,
                          std::span<const S> next_probs, std::span<const S> support,
                          std::span<S> out) {
    const std::size_t atoms = support.size();
    if (next_probs.size() != atoms || out.size() != atoms) {
        throw std::invalid_argument("project_distribution: size mismatch");
    }
    const double v_min = static_cast<double>(support.front());
    const double v_max = static_cast<double>(support.back());
    const double dz = (v_max - v_min) / static_cast<double>(atoms - 1);

    std::fill(out.begin(), out.end(), S(0));
    for (std::size_t j = 0; j < atoms; ++j) {
        const double p = static_cast<double>(next_probs[j]);
        if (p == 0.0) continue;
        const double tz = std::clamp(
            n_step_reward + discount_to_bootstrap * static_cast<double>(support[j]), v_min,
            v_max);
        const double position = (tz - v_min) / dz;
        const std::size_t lower = static_cast<std::size_t>(
            std::clamp(std::floor(position), 0.0, static_cast<double>(atoms - 1)));
        const std::size_t upper = static_cast<std::size_t>(
            std::clamp(std::ceil(position), 0.0, static_cast<double>(atoms - 1)));
        if (lower == upper) {
            out[lower] += static_cast<S>(p);
        } else {
            out[lower] += static_cast<S>(p * (static_cast<double>(upper) - position));
            out[upper] += static_cast<S>(p * (position - static_cast<double>(lower)));
        }
    }
}

template void project_distribution<float>(double, double, std::span<const float>,
                                          std::span<const float>, std::span<float>);
template void project_distribution<double>(double, double, std::span<const double>,
                                           std::span<const double>, std::span<double>);

namespace {

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(values.size()); ++a) {
        if (values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(best)]) {
            best = a;
        }
    }
    return best;
}

}  // namespace

RainbowAgent::RainbowAgent(const NetworkConfig& net_config, const HyperParams& hyper,
                           std::uint64_t seed)
    : hyper_(hyper),
      online_(net_config, seed),
      target_(net_config, seed),
      buffer_(hyper.replay_capacity, hyper.priority_exponent, hyper.priority_floor),
      assembler_(hyper.n_step, hyper.gamma),
      noise_rng_(seed, 1),
      sample_rng_(seed, 2) {
    target_.copy_params_from(online_);
    probs_scratch_.resize(static_cast<std::size_t>(net_config.action_count * net_config.atom_count));
    target_scratch_.resize(static_cast<std::size_t>(net_config.atom_count));
    q_scratch_.resize(static_cast<std::size_t>(net_config.action_count));
}

Action RainbowAgent::select_action(const Observation& obs, bool train_mode) {
    if (train_mode) {
        online_.resample_noise(noise_rng_);
        online_.q_values(obs, NoiseMode::sampled, q_scratch_);
    } else {
        online_.q_values(obs, NoiseMode::zero, q_scratch_);
    }
    return static_cast<Action>(argmax_lowest(q_scratch_));
}

void RainbowAgent::record(const Observation& obs, Action action, double reward,
                          const Observation& next_obs, EpisodeStatus status) {
    emitted_.clear();
    assembler_.push(obs, static_cast<int>(action), reward, next_obs, status, emitted_);
    for (Transition& t : emitted_) buffer_.push(std::move(t));
    ++env_steps_;
}

std::optional<TrainStats> RainbowAgent::maybe_train() {
    if (env_steps_ < hyper_.train_start) return std::nullopt;
    if (buffer_.size() < static_cast<std::size_t>(hyper_.batch_size)) return std::nullopt;
    if (hyper_.train_every > 1 && env_steps_ % hyper_.train_every != 0) return std::nullopt;
    return train_step();
}

TrainStats RainbowAgent::train_step() {
    const double beta =
        annealed_beta(hyper_.is_beta_start, train_steps_, hyper_.beta_anneal_steps);
    ReplayBuffer::Batch batch =
        buffer_.sample(static_cast<std::size_t>(hyper_.batch_size), beta, sample_rng_);

    online_.resample_noise(noise_rng_);
    target_.resample_noise(noise_rng_);

    const int atoms = online_.config().atom_count;
    const std::size_t batch_size = batch.indices.size();
    std::vector<float> targets(batch_size * static_cast<std::size_t>(atoms));

    for (std::size_t k = 0; k < batch_size; ++k) {
        const Transition& t = buffer_.at(batch.indices[k]);
        float* m = targets.data() + k * static_cast<std::size_t>(atoms);
        if (t.discount_to_bootstrap == 0.0f) {
            // No bootstrap: next-state probabilities are irrelevant, all mass
            // lands on the clamped reward.
            std::fill(target_scratch_.begin(), target_scratch_.end(), 0.0f);
            target_scratch_[0] = 1.0f;
            project_distribution<float>(t.n_step_reward, 0.0, target_scratch_,
                                        online_.support(), std::span<float>(m, atoms));
            continue;
        }
        online_.q_values(t.next_observation, NoiseMode::sampled, q_scratch_);
        const int best = argmax_lowest(q_scratch_);
        target_.forward(t.next_observation, NoiseMode::sampled, probs_scratch_);
        const float* row = probs_scratch_.data() + static_cast<std::size_t>(best) * atoms;
        project_distribution<float>(t.n_step_reward, t.discount_to_bootstrap,
                                    std::span<const float>(row, atoms), online_.support(),
                                    std::span<float>(m, atoms));
    }

    online_.zero_grads();
    std::vector<double> losses(batch_size);
    double loss_sum = 0.0;
    for (std::size_t k = 0; k < batch_size; ++k) {
        const Transition& t = buffer_.at(batch.indices[k]);
        const float* m = targets.data() + k * static_cast<std::size_t>(atoms);
        losses[k] = online_.train_sample(t.observation, t.action,
                                         std::span<const float>(m, atoms), batch.weights[k],
                                         NoiseMode::sampled);
        loss_sum += losses[k];
    }
    buffer_.update_priorities(batch.indices, losses);

    TrainStats stats;
    stats.grad_norm = online_.apply_gradients(adam_, hyper_.learning_rate, hyper_.grad_clip);
    stats.mean_loss = loss_sum / static_cast<double>(batch_size);

    ++train_steps_;
    if (train_steps_ % hyper_.target_sync_every == 0) {
        target_.copy_params_from(online_);
    }
    return stats;
}

void RainbowAgent::set_counters(long env_steps, long train_steps) {
    env_steps_ = env_steps;
    train_steps_ = train_steps;
}

void RainbowAgent::q_distribution(const Observation& obs, std::vector<float>& probs,
                                  std::vector<double>& q_values) {
    probs.resize(probs_scratch_.size());
    q_values.resize(q_scratch_.size());
    online_.forward(obs, NoiseMode::zero, probs);
    const int atoms = online_.config().atom_count;
    for (int a = 0; a < online_.config().action_count; ++a) {
        double q = 0.0;
        for (int j = 0; j < atoms; ++j) {
            q += static_cast<double>(online_.support()[static_cast<std::size_t>(j)]) *
                 static_cast<double>(probs[static_cast<std::size_t>(a * atoms + j)]);
        }
        q_values[static_cast<std::size_t>(a)] = q;
    }
}

DoubleDqnAgent::DoubleDqnAgent(const NetworkConfig& net_config, const HyperParams& hyper,
                               std::uint64_t seed)
    : hyper_(hyper),
      online_(net_config, seed),
      target_(net_config, seed),
      buffer_(hyper.replay_capacity, /*priority_exponent=*/0.0, hyper.priority_floor),
      assembler_(hyper.n_step, hyper.gamma),
      explore_rng_(seed, 1),
      sample_rng_(seed, 2) {
    target_.copy_params_from(online_);
    q_scratch_.resize(static_cast<std::size_t>(net_config.action_count));
}

double DoubleDqnAgent::epsilon() const {
    const double frac = std::min(
        1.0, static_cast<double>(env_steps_) / static_cast<double>(hyper_.eps_anneal_steps));
    return hyper_.eps_start + frac * (hyper_.eps_final - hyper_.eps_start);
}

Action DoubleDqnAgent::select_action(const Observation& obs, bool train_mode) {
    if (train_mode && explore_rng_.uniform01() < epsilon()) {
        return static_cast<Action>(explore_rng_.uniform_int(0, online_.config().action_count - 1));
    }
    online_.q_values(obs, q_scratch_);
    return static_cast<Action>(argmax_lowest(q_scratch_));
}

void DoubleDqnAgent::record(const Observation& obs, Action action, double reward,
                            const Observation& next_obs, EpisodeStatus status) {
    emitted_.clear();
    assembler_.push(obs, static_cast<int>(action), reward, next_obs, status, emitted_);
    for (Transition& t : emitted_) buffer_.push(std::move(t));
    ++env_steps_;
}

std::optional<TrainStats> DoubleDqnAgent::maybe_train() {
    if (env_steps_ < hyper_.train_start) return std::nullopt;
    if (buffer_.size() < static_cast<std::size_t>(hyper_.batch_size)) return std::nullopt;
    if (hyper_.train_every > 1 && env_steps_ % hyper_.train_every != 0) return std::nullopt;
    return train_step();
}

TrainStats DoubleDqnAgent::train_step() {
    ReplayBuffer::Batch batch =
        buffer_.sample(static_cast<std::size_t>(hyper_.batch_size), 1.0, sample_rng_);

    const std::size_t batch_size = batch.indices.size();
    std::vector<double> ys(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        const Transition& t = buffer_.at(batch.indices[k]);
        double y = t.n_step_reward;
        if (t.discount_to_bootstrap != 0.0f) {
            online_.q_values(t.next_observation, q_scratch_);
            const int best = argmax_lowest(q_scratch_);
            target_.q_values(t.next_observation, q_scratch_);
            y += static_cast<double>(t.discount_to_bootstrap) *
                 q_scratch_[static_cast<std::size_t>(best)];
        }
        ys[k] = y;
    }

    online_.zero_grads();
    double loss_sum = 0.0;
    for (std::size_t k = 0; k < batch_size; ++k) {
        const Transition& t = buffer_.at(batch.indices[k]);
        loss_sum += online_.train_sample(t.observation, t.action, ys[k], batch.weights[k]);
    }

    TrainStats stats;
    stats.grad_norm = online_.apply_gradients(adam_, hyper_.learning_rate, hyper_.grad_clip);
    stats.mean_loss = loss_sum / static_cast<double>(batch_size);

    ++train_steps_;
    if (train_steps_ % hyper_.target_sync_every == 0) {
        target_.copy_params_from(online_);
    }
    return stats;
}

void DoubleDqnAgent::set_counters(long env_steps, long train_steps) {
    env_steps_ = env_steps;
    train_steps_ = train_steps;
}

}  // namespace highway
