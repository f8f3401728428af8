#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "highway/env.hpp"
#include "highway/rng.hpp"

namespace highway {

struct Transition {
    Observation observation;
    Observation next_observation;
    int action = 0;
    float n_step_reward = 0.0f;
    float discount_to_bootstrap = 0.0f;  // gamma^k, or 0 past a true terminal
    EpisodeStatus terminal_kind = EpisodeStatus::running;
};

// Binary indexed sum tree over leaf priorities; leaves store p^omega directly.
class SumTree {
public:
    explicit SumTree(std::size_t min_capacity);

    std::size_t capacity() const { return capacity_; }
    double total() const { return nodes_[1]; }
    double leaf(std::size_t index) const { return nodes_[capacity_ + index]; }
    void set_leaf(std::size_t index, double value);

    // Finds the leaf whose cumulative range contains `mass` in [0, total).
    std::size_t find_prefix(double mass) const;

    // Recomputes every internal node from the leaves; true when all stored
    // sums agree within the given relative tolerance.
    bool audit(double rel_tolerance = 1e-6) const;

private:
    std::size_t capacity_;        // power of two
    std::vector<double> nodes_;   // 1-based heap layout, nodes_[1] = root
};

// Accumulates the sliding n-step window and emits completed transitions.
// A true terminal flushes every partial window with a shortened horizon and
// zero bootstrap discount; truncation flushes with the discount kept.
class NStepAssembler {
public:
    NStepAssembler(int n, double gamma);

    void push(const Observation& obs, int action, double reward, const Observation& next_obs,
              EpisodeStatus status, std::vector<Transition>& out);
    void reset();

private:
    struct Pending {
        Observation observation;
        int action;
        double reward_sum;
        int steps;
    };

    int n_;
    double gamma_;
    std::vector<Pending> window_;
};

class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, double priority_exponent, double priority_floor);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t index) const { return storage_[index]; }
    const SumTree& tree() const { return tree_; }

    // New transitions enter at the current maximum leaf priority (1 if empty).
    void push(Transition transition);

    struct Batch {
        std::vector<std::size_t> indices;
        std::vector<double> weights;  // importance weights, max-normalized
    };

    // Stratified proportional sampling: one uniform draw per equal segment of
    // the total mass. Throws when fewer than batch_size items are stored.
    Batch sample(std::size_t batch_size, double is_beta, Rng& rng) const;

    // leaf <- (|loss| + floor)^omega
    void update_priorities(std::span<const std::size_t> indices,
                           std::span<const double> losses);

private:
    std::size_t capacity_;
    double exponent_;
    double floor_;
    std::vector<Transition> storage_;
    SumTree tree_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
    double max_leaf_ = 1.0;
};

// beta(t) = min(1, start + t * (1 - start) / horizon)
double annealed_beta(double beta_start, long step, long horizon);

}  // namespace highway
