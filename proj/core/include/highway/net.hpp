#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "highway/rng.hpp"

namespace highway {

struct NetworkConfig {
    int vehicle_slots = 20;
    int features_per_slot = 3;
    int ego_features = 2;
    int encoder_hidden = 32;   // first shared per-slot layer
    int encoder_out = 64;      // second shared per-slot layer
    int head_width = 256;
    int atom_count = 51;
    double v_min = -120.0;
    double v_max = 120.0;
    double noisy_sigma0 = 0.5;
    int action_count = 3;

    int input_size() const { return ego_features + vehicle_slots * features_per_slot; }
    int trunk_size() const { return ego_features + encoder_out; }
};

enum class NoiseMode { sampled, zero };

// Flat parameter/gradient storage with a named-section registry. Everything a
// network owns lives here, which keeps Adam, clipping, target sync, finite
// difference checks and checkpoints trivial.
template <class S>
struct ParamStore {
    struct Entry {
        std::string name;
        std::size_t offset;
        std::size_t count;
    };

    std::vector<S> values;
    std::vector<S> grads;
    std::vector<Entry> entries;

    std::size_t add(std::string name, std::size_t count) {
        const std::size_t offset = values.size();
        entries.push_back({std::move(name), offset, count});
        values.resize(offset + count, S(0));
        grads.resize(offset + count, S(0));
        return offset;
    }

    void zero_grads() { std::fill(grads.begin(), grads.end(), S(0)); }

    S* value_at(std::size_t offset) { return values.data() + offset; }
    const S* value_at(std::size_t offset) const { return values.data() + offset; }
    S* grad_at(std::size_t offset) { return grads.data() + offset; }
};

template <class S>
struct DenseLayer {
    int in = 0, out = 0;
    std::size_t w = 0, b = 0;

    void init(ParamStore<S>& ps, const std::string& name, int in_dim, int out_dim, Rng& rng);
    void forward(const ParamStore<S>& ps, const S* x, S* y) const;
    // Accumulates weight/bias grads from upstream dy; writes input grads to dx
    // unless dx is null.
    void backward(ParamStore<S>& ps, const S* x, const S* dy, S* dx) const;
};

template <class S>
struct NoisyDenseLayer {
    int in = 0, out = 0;
    std::size_t mu_w = 0, mu_b = 0, sigma_w = 0, sigma_b = 0;
    std::vector<S> eps_in, eps_out;          // factorized noise, f(x)=sign(x)sqrt|x|
    mutable std::vector<S> w_eff, b_eff;     // materialized sampled-mode weights
    mutable bool cache_fresh = false;

    void init(ParamStore<S>& ps, const std::string& name, int in_dim, int out_dim,
              double sigma0, Rng& rng);
    void resample(Rng& rng);
    void invalidate() { cache_fresh = false; }
    void refresh_cache(const ParamStore<S>& ps) const;
    void forward(const ParamStore<S>& ps, const S* x, S* y, NoiseMode mode) const;
    void backward(ParamStore<S>& ps, const S* x, const S* dy, S* dx, NoiseMode mode) const;
};

// Shared per-slot encoder with element-wise max aggregation. Slot weights are
// shared, so the pooled code is invariant to slot permutations.
template <class S>
struct SlotEncoder {
    DenseLayer<S> layer1, layer2;
    int slots = 0, slot_features = 0;

    struct Workspace {
        std::vector<S> z1, h1, z2, h2;  // per slot, concatenated
        std::vector<S> pooled;
        std::vector<int> argmax;
        std::vector<S> slot_grad;       // scratch for backward
        std::vector<S> z1_grad, h1_grad, z2_grad;
    };

    void init(ParamStore<S>& ps, const std::string& name, const NetworkConfig& cfg, Rng& rng);
    // x points at the per-slot block of the observation (after ego features)
    void forward(const ParamStore<S>& ps, const S* x, Workspace& w) const;
    void backward(ParamStore<S>& ps, const S* x, const S* dpooled, Workspace& w) const;
};

template <class S>
struct AdamState {
    std::vector<S> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

// Clips the global gradient norm then applies Adam to every parameter.
// Returns the pre-clip norm; throws on non-finite gradients.
template <class S>
double adam_step(ParamStore<S>& ps, AdamState<S>& state, double learning_rate,
                 double grad_clip);

// Distributional dueling network: shared slot encoder, two noisy fully
// connected layers per head, per-atom dueling combine, per-action softmax.
template <class S>
class DistributionalNet {
public:
    DistributionalNet() = default;
    DistributionalNet(const NetworkConfig& cfg, std::uint64_t init_seed);

    const NetworkConfig& config() const { return cfg_; }
    std::span<const S> support() const { return support_; }

    void resample_noise(Rng& rng);

    // probs must hold action_count * atom_count; every action's row sums to 1.
    void forward(std::span<const S> obs, NoiseMode mode, std::span<S> probs);

    // Expected value per action under the current distribution.
    void q_values(std::span<const S> obs, NoiseMode mode, std::span<double> out);

    // Cross-entropy against a projected target for one (obs, action) sample;
    // is_weight scales the gradient contribution. Returns the unweighted loss.
    double train_sample(std::span<const S> obs, int action, std::span<const S> target,
                        double is_weight, NoiseMode mode);

    void zero_grads();
    double apply_gradients(AdamState<S>& adam, double learning_rate, double grad_clip);
    void copy_params_from(const DistributionalNet& other);

    ParamStore<S>& params() { return ps_; }
    const ParamStore<S>& params() const { return ps_; }

private:
    void forward_internal(std::span<const S> obs, NoiseMode mode);
    void touch();

    NetworkConfig cfg_;
    ParamStore<S> ps_;
    SlotEncoder<S> encoder_;
    NoisyDenseLayer<S> value1_, value2_, adv1_, adv2_;
    std::vector<S> support_;

    // per-sample activations
    typename SlotEncoder<S>::Workspace enc_ws_;
    std::vector<S> trunk_, vz1_, vh1_, v_logits_, az1_, ah1_, a_logits_;
    std::vector<S> logits_, probs_, dlogits_, dval_, dadv_, dtrunk_, dh_;
};

// Plain (non-noisy, non-dueling) scalar-Q network over the same encoder; the
// double-DQN baseline head.
template <class S>
class ScalarNet {
public:
    ScalarNet() = default;
    ScalarNet(const NetworkConfig& cfg, std::uint64_t init_seed);

    const NetworkConfig& config() const { return cfg_; }

    void q_values(std::span<const S> obs, std::span<double> out);

    // Huber loss (delta = 1) against a scalar TD target on one action.
    double train_sample(std::span<const S> obs, int action, double target, double is_weight);

    void zero_grads();
    double apply_gradients(AdamState<S>& adam, double learning_rate, double grad_clip);
    void copy_params_from(const ScalarNet& other);

    ParamStore<S>& params() { return ps_; }
    const ParamStore<S>& params() const { return ps_; }

private:
    void forward_internal(std::span<const S> obs);

    NetworkConfig cfg_;
    ParamStore<S> ps_;
    SlotEncoder<S> encoder_;
    DenseLayer<S> fc1_, fc2_;
    typename SlotEncoder<S>::Workspace enc_ws_;
    std::vector<S> trunk_, z1_, h1_, q_, dq_, dh1_, dtrunk_;
};

extern template struct DenseLayer<float>;
extern template struct DenseLayer<double>;
extern template struct NoisyDenseLayer<float>;
extern template struct NoisyDenseLayer<double>;
extern template struct SlotEncoder<float>;
extern template struct SlotEncoder<double>;
extern template double adam_step<float>(ParamStore<float>&, AdamState<float>&, double, double);
extern template double adam_step<double>(ParamStore<double>&, AdamState<double>&, double, double);
extern template class DistributionalNet<float>;
extern template class DistributionalNet<double>;
extern template class ScalarNet<float>;
extern template class ScalarNet<double>;

}  // namespace highway
