#include "highway/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace highway {

SumTree::SumTree(std::size_t min_capacity) {
    capacity_ = 1;
    while (capacity_ < min_capacity) capacity_ <<= 1;
    nodes_.assign(2 * capacity_, 0.0);
}

void SumTree::set_leaf(std::size_t index, double value) {
    if (index >= capacity_) throw std::out_of_range("SumTree::set_leaf: index out of range");
    std::size_t node = capacity_ + index;
    nodes_[node] = value;
    for (node >>= 1; node >= 1; node >>= 1) {
        nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
        if (node == 1) break;
    }
}

std::size_t SumTree::find_prefix(double mass) const {
    std::size_t node = 1;
    while (node < capacity_) {
        const std::size_t left = 2 * node;
        if (mass < nodes_[left]) {
            node = left;
        } else {
            mass -= nodes_[left];
            node = left + 1;
        }
    }
    return node - capacity_;
}

bool SumTree::audit(double rel_tolerance) const {
    for (std::size_t node = capacity_ - 1; node >= 1; --node) {
        const double expect = nodes_[2 * node] + nodes_[2 * node + 1];
        const double got = nodes_[node];
        const double scale = std::max({std::abs(expect), std::abs(got), 1.0});
        if (std::abs(expect - got) > rel_tolerance * scale) return false;
        if (node == 1) break;
    }
    return true;
}

NStepAssembler::NStepAssembler(int n, double gamma) : n_(n), gamma_(gamma) {
    if (n_ < 1) throw std::invalid_argument("NStepAssembler: n must be >= 1");
}

void NStepAssembler::reset() { window_.clear(); }

void NStepAssembler::push(const Observation& obs, int action, double reward,
                          const Observation& next_obs, EpisodeStatus status,
                          std::vector<Transition>& out) {
    window_.push_back({obs, action, 0.0, 0});
    for (Pending& p : window_) {
        p.reward_sum += std::pow(gamma_, static_cast<double>(p.steps)) * reward;
        p.steps += 1;
    }

    const bool true_terminal =
        status == EpisodeStatus::solved || status == EpisodeStatus::collided;
    const bool truncated = status == EpisodeStatus::truncated;

    auto emit = [&](Pending& p) {
        Transition t;
        t.observation = std::move(p.observation);
        t.next_observation = next_obs;
        t.action = p.action;
        t.n_step_reward = static_cast<float>(p.reward_sum);
        t.discount_to_bootstrap = true_terminal
                                      ? 0.0f
                                      : static_cast<float>(std::pow(gamma_, p.steps));
        t.terminal_kind = status;
        out.push_back(std::move(t));
    };

    if (true_terminal || truncated) {
        for (Pending& p : window_) emit(p);
        window_.clear();
        return;
    }

    if (static_cast<int>(window_.size()) == n_) {
        Pending& head = window_.front();
        Transition t;
        t.observation = std::move(head.observation);
        t.next_observation = next_obs;
        t.action = head.action;
        t.n_step_reward = static_cast<float>(head.reward_sum);
        t.discount_to_bootstrap = static_cast<float>(std::pow(gamma_, head.steps));
        t.terminal_kind = EpisodeStatus::running;
        out.push_back(std::move(t));
        window_.erase(window_.begin());
    }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double priority_exponent,
                           double priority_floor)
    : capacity_(capacity), exponent_(priority_exponent), floor_(priority_floor),
      tree_(capacity) {
    storage_.resize(capacity_);
}

void ReplayBuffer::push(Transition transition) {
    storage_[next_] = std::move(transition);
    tree_.set_leaf(next_, max_leaf_);
    next_ = (next_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t batch_size, double is_beta,
                                         Rng& rng) const {
    if (size_ < batch_size) {
        throw std::runtime_error("ReplayBuffer::sample: not enough stored transitions");
    }
    Batch batch;
    batch.indices.reserve(batch_size);
    batch.weights.reserve(batch_size);

    const double total = tree_.total();
    const double segment = total / static_cast<double>(batch_size);
    const double n = static_cast<double>(size_);

    double max_weight = 0.0;
    for (std::size_t k = 0; k < batch_size; ++k) {
        const double mass = (static_cast<double>(k) + rng.uniform01()) * segment;
        std::size_t index = tree_.find_prefix(std::min(mass, total * (1.0 - 1e-12)));
        if (index >= size_) index = size_ - 1;  // zero-mass tail guard
        const double prob = tree_.leaf(index) / total;
        const double weight = std::pow(n * std::max(prob, 1e-12), -is_beta);
        batch.indices.push_back(index);
        batch.weights.push_back(weight);
        max_weight = std::max(max_weight, weight);
    }
    for (double& w : batch.weights) w /= max_weight;
    return batch;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices,
                                     std::span<const double> losses) {
    if (indices.size() != losses.size()) {
        throw std::invalid_argument("ReplayBuffer::update_priorities: size mismatch");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= size_) {
            throw std::out_of_range("ReplayBuffer::update_priorities: index out of range");
        }
        const double leaf = std::pow(std::abs(losses[k]) + floor_, exponent_);
        tree_.set_leaf(indices[k], leaf);
        max_leaf_ = std::max(max_leaf_, leaf);
    }
}

double annealed_beta(double beta_start, long step, long horizon) {
    if (horizon <= 0) return 1.0;
    const double frac = static_cast<double>(step) / static_cast<double>(horizon);
    return std::min(1.0, beta_start + frac * (1.0 - beta_start));
}

}  // namespace highway
