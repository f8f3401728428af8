#include "highway/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace highway {

namespace {

template <class S>
S signed_sqrt(S x) {
    return x >= S(0) ? static_cast<S>(std::sqrt(x)) : static_cast<S>(-std::sqrt(-x));
}

template <class S>
void relu_forward(const S* z, S* h, int n) {
    for (int i = 0; i < n; ++i) h[i] = z[i] > S(0) ? z[i] : S(0);
}

template <class S>
void relu_backward(const S* z, const S* dh, S* dz, int n) {
    for (int i = 0; i < n; ++i) dz[i] = z[i] > S(0) ? dh[i] : S(0);
}

}  // namespace

template <class S>
void DenseLayer<S>::init(ParamStore<S>& ps, const std::string& name, int in_dim, int out_dim,
                         Rng& rng) {
    in = in_dim;
    out = out_dim;
    w = ps.add(name + ".w", static_cast<std::size_t>(in) * out);
    b = ps.add(name + ".b", static_cast<std::size_t>(out));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    S* wp = ps.value_at(w);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) {
        wp[k] = static_cast<S>(rng.uniform(-bound, bound));
    }
    S* bp = ps.value_at(b);
    for (int o = 0; o < out; ++o) bp[o] = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
void DenseLayer<S>::forward(const ParamStore<S>& ps, const S* x, S* y) const {
    const S* wp = ps.value_at(w);
    const S* bp = ps.value_at(b);
    for (int o = 0; o < out; ++o) {
        const S* row = wp + static_cast<std::size_t>(o) * in;
        S acc = bp[o];
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

template <class S>
void DenseLayer<S>::backward(ParamStore<S>& ps, const S* x, const S* dy, S* dx) const {
    S* dw = ps.grad_at(w);
    S* db = ps.grad_at(b);
    const S* wp = ps.value_at(w);
    if (dx) std::fill(dx, dx + in, S(0));
    for (int o = 0; o < out; ++o) {
        const S g = dy[o];
        if (g == S(0)) continue;
        db[o] += g;
        S* dwrow = dw + static_cast<std::size_t>(o) * in;
        const S* wrow = wp + static_cast<std::size_t>(o) * in;
        if (dx) {
            for (int i = 0; i < in; ++i) {
                dwrow[i] += g * x[i];
                dx[i] += wrow[i] * g;
            }
        } else {
            for (int i = 0; i < in; ++i) dwrow[i] += g * x[i];
        }
    }
}

template <class S>
void NoisyDenseLayer<S>::init(ParamStore<S>& ps, const std::string& name, int in_dim,
                              int out_dim, double sigma0, Rng& rng) {
    in = in_dim;
    out = out_dim;
    mu_w = ps.add(name + ".mu_w", static_cast<std::size_t>(in) * out);
    mu_b = ps.add(name + ".mu_b", static_cast<std::size_t>(out));
    sigma_w = ps.add(name + ".sigma_w", static_cast<std::size_t>(in) * out);
    sigma_b = ps.add(name + ".sigma_b", static_cast<std::size_t>(out));

    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    const S sigma_init = static_cast<S>(sigma0 / std::sqrt(static_cast<double>(in)));
    S* mw = ps.value_at(mu_w);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) {
        mw[k] = static_cast<S>(rng.uniform(-bound, bound));
    }
    S* mb = ps.value_at(mu_b);
    for (int o = 0; o < out; ++o) mb[o] = static_cast<S>(rng.uniform(-bound, bound));
    std::fill_n(ps.value_at(sigma_w), static_cast<std::size_t>(in) * out, sigma_init);
    std::fill_n(ps.value_at(sigma_b), static_cast<std::size_t>(out), sigma_init);

    eps_in.assign(static_cast<std::size_t>(in), S(0));
    eps_out.assign(static_cast<std::size_t>(out), S(0));
    w_eff.assign(static_cast<std::size_t>(in) * out, S(0));
    b_eff.assign(static_cast<std::size_t>(out), S(0));
    cache_fresh = false;
}

template <class S>
void NoisyDenseLayer<S>::resample(Rng& rng) {
    for (int i = 0; i < in; ++i) eps_in[static_cast<std::size_t>(i)] = signed_sqrt(static_cast<S>(rng.normal()));
    for (int o = 0; o < out; ++o) eps_out[static_cast<std::size_t>(o)] = signed_sqrt(static_cast<S>(rng.normal()));
    cache_fresh = false;
}

template <class S>
void NoisyDenseLayer<S>::refresh_cache(const ParamStore<S>& ps) const {
    const S* mw = ps.value_at(mu_w);
    const S* sw = ps.value_at(sigma_w);
    const S* mb = ps.value_at(mu_b);
    const S* sb = ps.value_at(sigma_b);
    for (int o = 0; o < out; ++o) {
        const S eo = eps_out[static_cast<std::size_t>(o)];
        const std::size_t base = static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
            w_eff[base + i] = mw[base + i] + sw[base + i] * eo * eps_in[static_cast<std::size_t>(i)];
        }
        b_eff[static_cast<std::size_t>(o)] = mb[o] + sb[o] * eo;
    }
    cache_fresh = true;
}

template <class S>
void NoisyDenseLayer<S>::forward(const ParamStore<S>& ps, const S* x, S* y,
                                 NoiseMode mode) const {
    const S* wp;
    const S* bp;
    if (mode == NoiseMode::zero) {
        wp = ps.value_at(mu_w);
        bp = ps.value_at(mu_b);
    } else {
        if (!cache_fresh) refresh_cache(ps);
        wp = w_eff.data();
        bp = b_eff.data();
    }
    for (int o = 0; o < out; ++o) {
        const S* row = wp + static_cast<std::size_t>(o) * in;
        S acc = bp[o];
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

template <class S>
void NoisyDenseLayer<S>::backward(ParamStore<S>& ps, const S* x, const S* dy, S* dx,
                                  NoiseMode mode) const {
    S* dmw = ps.grad_at(mu_w);
    S* dmb = ps.grad_at(mu_b);
    const S* wp;
    if (mode == NoiseMode::zero) {
        wp = ps.value_at(mu_w);
    } else {
        if (!cache_fresh) refresh_cache(ps);
        wp = w_eff.data();
    }
    if (dx) std::fill(dx, dx + in, S(0));

    if (mode == NoiseMode::zero) {
        for (int o = 0; o < out; ++o) {
            const S g = dy[o];
            if (g == S(0)) continue;
            dmb[o] += g;
            S* dwrow = dmw + static_cast<std::size_t>(o) * in;
            const S* wrow = wp + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                dwrow[i] += g * x[i];
                if (dx) dx[i] += wrow[i] * g;
            }
        }
        return;
    }

    S* dsw = ps.grad_at(sigma_w);
    S* dsb = ps.grad_at(sigma_b);
    for (int o = 0; o < out; ++o) {
        const S g = dy[o];
        if (g == S(0)) continue;
        const S eo = eps_out[static_cast<std::size_t>(o)];
        dmb[o] += g;
        dsb[o] += g * eo;
        const std::size_t base = static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
            const S gx = g * x[i];
            dmw[base + i] += gx;
            dsw[base + i] += gx * eo * eps_in[static_cast<std::size_t>(i)];
            if (dx) dx[i] += wp[base + i] * g;
        }
    }
}

template <class S>
void SlotEncoder<S>::init(ParamStore<S>& ps, const std::string& name, const NetworkConfig& cfg,
                          Rng& rng) {
    slots = cfg.vehicle_slots;
    slot_features = cfg.features_per_slot;
    layer1.init(ps, name + ".conv1", cfg.features_per_slot, cfg.encoder_hidden, rng);
    layer2.init(ps, name + ".conv2", cfg.encoder_hidden, cfg.encoder_out, rng);
}

template <class S>
void SlotEncoder<S>::forward(const ParamStore<S>& ps, const S* x, Workspace& w) const {
    const int h1 = layer1.out;
    const int h2 = layer2.out;
    w.z1.resize(static_cast<std::size_t>(slots) * h1);
    w.h1.resize(static_cast<std::size_t>(slots) * h1);
    w.z2.resize(static_cast<std::size_t>(slots) * h2);
    w.h2.resize(static_cast<std::size_t>(slots) * h2);
    w.pooled.assign(static_cast<std::size_t>(h2), std::numeric_limits<S>::lowest());
    w.argmax.assign(static_cast<std::size_t>(h2), 0);

    for (int s = 0; s < slots; ++s) {
        const S* xs = x + static_cast<std::size_t>(s) * slot_features;
        S* z1 = w.z1.data() + static_cast<std::size_t>(s) * h1;
        S* h1p = w.h1.data() + static_cast<std::size_t>(s) * h1;
        S* z2 = w.z2.data() + static_cast<std::size_t>(s) * h2;
        S* h2p = w.h2.data() + static_cast<std::size_t>(s) * h2;
        layer1.forward(ps, xs, z1);
        relu_forward(z1, h1p, h1);
        layer2.forward(ps, h1p, z2);
        relu_forward(z2, h2p, h2);
        for (int f = 0; f < h2; ++f) {
            if (h2p[f] > w.pooled[static_cast<std::size_t>(f)]) {
                w.pooled[static_cast<std::size_t>(f)] = h2p[f];
                w.argmax[static_cast<std::size_t>(f)] = s;
            }
        }
    }
}

template <class S>
void SlotEncoder<S>::backward(ParamStore<S>& ps, const S* x, const S* dpooled,
                              Workspace& w) const {
    const int h1 = layer1.out;
    const int h2 = layer2.out;
    w.slot_grad.assign(static_cast<std::size_t>(slots) * h2, S(0));
    w.z1_grad.resize(static_cast<std::size_t>(h1));
    w.h1_grad.resize(static_cast<std::size_t>(h1));
    w.z2_grad.resize(static_cast<std::size_t>(h2));

    for (int f = 0; f < h2; ++f) {
        w.slot_grad[static_cast<std::size_t>(w.argmax[static_cast<std::size_t>(f)]) * h2 + f] +=
            dpooled[f];
    }
    for (int s = 0; s < slots; ++s) {
        const S* dh2 = w.slot_grad.data() + static_cast<std::size_t>(s) * h2;
        bool any = false;
        for (int f = 0; f < h2 && !any; ++f) any = dh2[f] != S(0);
        if (!any) continue;

        const S* z2 = w.z2.data() + static_cast<std::size_t>(s) * h2;
        const S* h1p = w.h1.data() + static_cast<std::size_t>(s) * h1;
        const S* z1 = w.z1.data() + static_cast<std::size_t>(s) * h1;
        const S* xs = x + static_cast<std::size_t>(s) * slot_features;

        relu_backward(z2, dh2, w.z2_grad.data(), h2);
        layer2.backward(ps, h1p, w.z2_grad.data(), w.h1_grad.data());
        relu_backward(z1, w.h1_grad.data(), w.z1_grad.data(), h1);
        layer1.backward(ps, xs, w.z1_grad.data(), nullptr);
    }
}

template <class S>
double adam_step(ParamStore<S>& ps, AdamState<S>& state, double learning_rate,
                 double grad_clip) {
    const std::size_t n = ps.values.size();
    if (state.m.size() != n) {
        state.m.assign(n, S(0));
        state.v.assign(n, S(0));
        state.step = 0;
    }

    double norm_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double g = static_cast<double>(ps.grads[k]);
        if (!std::isfinite(g)) {
            throw std::runtime_error("adam_step: non-finite gradient; step rejected");
        }
        norm_sq += g * g;
    }
    const double norm = std::sqrt(norm_sq);
    const double scale = (grad_clip > 0.0 && norm > grad_clip) ? grad_clip / norm : 1.0;

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t k = 0; k < n; ++k) {
        const double g = static_cast<double>(ps.grads[k]) * scale;
        const double m = state.beta1 * static_cast<double>(state.m[k]) + (1.0 - state.beta1) * g;
        const double v =
            state.beta2 * static_cast<double>(state.v[k]) + (1.0 - state.beta2) * g * g;
        state.m[k] = static_cast<S>(m);
        state.v[k] = static_cast<S>(v);
        const double update = learning_rate * (m / bc1) / (std::sqrt(v / bc2) + state.epsilon);
        ps.values[k] = static_cast<S>(static_cast<double>(ps.values[k]) - update);
    }
    return norm;
}

template <class S>
DistributionalNet<S>::DistributionalNet(const NetworkConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
    Rng rng(init_seed);
    encoder_.init(ps_, "encoder", cfg_, rng);
    value1_.init(ps_, "value1", cfg_.trunk_size(), cfg_.head_width, cfg_.noisy_sigma0, rng);
    value2_.init(ps_, "value2", cfg_.head_width, cfg_.atom_count, cfg_.noisy_sigma0, rng);
    adv1_.init(ps_, "adv1", cfg_.trunk_size(), cfg_.head_width, cfg_.noisy_sigma0, rng);
    adv2_.init(ps_, "adv2", cfg_.head_width, cfg_.action_count * cfg_.atom_count,
               cfg_.noisy_sigma0, rng);

    support_.resize(static_cast<std::size_t>(cfg_.atom_count));
    const double dz = (cfg_.v_max - cfg_.v_min) / (cfg_.atom_count - 1);
    for (int i = 0; i < cfg_.atom_count; ++i) {
        support_[static_cast<std::size_t>(i)] = static_cast<S>(cfg_.v_min + i * dz);
    }

    trunk_.resize(static_cast<std::size_t>(cfg_.trunk_size()));
    vz1_.resize(static_cast<std::size_t>(cfg_.head_width));
    vh1_.resize(static_cast<std::size_t>(cfg_.head_width));
    v_logits_.resize(static_cast<std::size_t>(cfg_.atom_count));
    az1_.resize(static_cast<std::size_t>(cfg_.head_width));
    ah1_.resize(static_cast<std::size_t>(cfg_.head_width));
    a_logits_.resize(static_cast<std::size_t>(cfg_.action_count * cfg_.atom_count));
    logits_.resize(a_logits_.size());
    probs_.resize(a_logits_.size());
    dlogits_.resize(a_logits_.size());
    dval_.resize(v_logits_.size());
    dadv_.resize(a_logits_.size());
    dtrunk_.resize(trunk_.size());
    dh_.resize(static_cast<std::size_t>(cfg_.head_width));
}

template <class S>
void DistributionalNet<S>::touch() {
    value1_.invalidate();
    value2_.invalidate();
    adv1_.invalidate();
    adv2_.invalidate();
}

template <class S>
void DistributionalNet<S>::resample_noise(Rng& rng) {
    value1_.resample(rng);
    value2_.resample(rng);
    adv1_.resample(rng);
    adv2_.resample(rng);
}

template <class S>
void DistributionalNet<S>::forward_internal(std::span<const S> obs, NoiseMode mode) {
    if (static_cast<int>(obs.size()) != cfg_.input_size()) {
        throw std::invalid_argument("DistributionalNet: observation size mismatch");
    }
    encoder_.forward(ps_, obs.data() + cfg_.ego_features, enc_ws_);
    for (int i = 0; i < cfg_.ego_features; ++i) trunk_[static_cast<std::size_t>(i)] = obs[static_cast<std::size_t>(i)];
    std::copy(enc_ws_.pooled.begin(), enc_ws_.pooled.end(), trunk_.begin() + cfg_.ego_features);

    value1_.forward(ps_, trunk_.data(), vz1_.data(), mode);
    relu_forward(vz1_.data(), vh1_.data(), cfg_.head_width);
    value2_.forward(ps_, vh1_.data(), v_logits_.data(), mode);

    adv1_.forward(ps_, trunk_.data(), az1_.data(), mode);
    relu_forward(az1_.data(), ah1_.data(), cfg_.head_width);
    adv2_.forward(ps_, ah1_.data(), a_logits_.data(), mode);

    const int actions = cfg_.action_count;
    const int atoms = cfg_.atom_count;
    for (int j = 0; j < atoms; ++j) {
        S mean_adv = S(0);
        for (int a = 0; a < actions; ++a) mean_adv += a_logits_[static_cast<std::size_t>(a * atoms + j)];
        mean_adv /= static_cast<S>(actions);
        for (int a = 0; a < actions; ++a) {
            logits_[static_cast<std::size_t>(a * atoms + j)] =
                v_logits_[static_cast<std::size_t>(j)] +
                a_logits_[static_cast<std::size_t>(a * atoms + j)] - mean_adv;
        }
    }
    for (int a = 0; a < actions; ++a) {
        const S* row = logits_.data() + static_cast<std::size_t>(a) * atoms;
        S* prow = probs_.data() + static_cast<std::size_t>(a) * atoms;
        S max_logit = row[0];
        for (int j = 1; j < atoms; ++j) max_logit = std::max(max_logit, row[j]);
        S sum = S(0);
        for (int j = 0; j < atoms; ++j) {
            prow[j] = std::exp(row[j] - max_logit);
            sum += prow[j];
        }
        const S inv = S(1) / sum;
        for (int j = 0; j < atoms; ++j) prow[j] *= inv;
    }
}

template <class S>
void DistributionalNet<S>::forward(std::span<const S> obs, NoiseMode mode, std::span<S> probs) {
    forward_internal(obs, mode);
    if (probs.size() != probs_.size()) {
        throw std::invalid_argument("DistributionalNet: probs size mismatch");
    }
    std::copy(probs_.begin(), probs_.end(), probs.begin());
}

template <class S>
void DistributionalNet<S>::q_values(std::span<const S> obs, NoiseMode mode,
                                    std::span<double> out) {
    forward_internal(obs, mode);
    for (int a = 0; a < cfg_.action_count; ++a) {
        double q = 0.0;
        const S* prow = probs_.data() + static_cast<std::size_t>(a) * cfg_.atom_count;
        for (int j = 0; j < cfg_.atom_count; ++j) {
            q += static_cast<double>(support_[static_cast<std::size_t>(j)]) *
                 static_cast<double>(prow[j]);
        }
        out[static_cast<std::size_t>(a)] = q;
    }
}

template <class S>
double DistributionalNet<S>::train_sample(std::span<const S> obs, int action,
                                          std::span<const S> target, double is_weight,
                                          NoiseMode mode) {
    if (static_cast<int>(target.size()) != cfg_.atom_count) {
        throw std::invalid_argument("DistributionalNet: target size mismatch");
    }
    forward_internal(obs, mode);

    const int atoms = cfg_.atom_count;
    const int actions = cfg_.action_count;
    const S* prow = probs_.data() + static_cast<std::size_t>(action) * atoms;
    const S* lrow = logits_.data() + static_cast<std::size_t>(action) * atoms;

    // loss = logsumexp(logits) - sum_j m_j * logit_j   (targets sum to one)
    S max_logit = lrow[0];
    for (int j = 1; j < atoms; ++j) max_logit = std::max(max_logit, lrow[j]);
    double lse = 0.0;
    for (int j = 0; j < atoms; ++j) lse += std::exp(static_cast<double>(lrow[j] - max_logit));
    lse = std::log(lse) + static_cast<double>(max_logit);
    double loss = lse;
    for (int j = 0; j < atoms; ++j) {
        loss -= static_cast<double>(target[static_cast<std::size_t>(j)]) *
                static_cast<double>(lrow[j]);
    }

    std::fill(dlogits_.begin(), dlogits_.end(), S(0));
    S* drow = dlogits_.data() + static_cast<std::size_t>(action) * atoms;
    for (int j = 0; j < atoms; ++j) {
        drow[j] = static_cast<S>((static_cast<double>(prow[j]) -
                                  static_cast<double>(target[static_cast<std::size_t>(j)])) *
                                 is_weight);
    }

    // dueling combine backward
    for (int j = 0; j < atoms; ++j) {
        S dsum = S(0);
        for (int a = 0; a < actions; ++a) dsum += dlogits_[static_cast<std::size_t>(a * atoms + j)];
        dval_[static_cast<std::size_t>(j)] = dsum;
        const S dmean = dsum / static_cast<S>(actions);
        for (int a = 0; a < actions; ++a) {
            dadv_[static_cast<std::size_t>(a * atoms + j)] =
                dlogits_[static_cast<std::size_t>(a * atoms + j)] - dmean;
        }
    }

    std::vector<S> dtrunk_v(trunk_.size());
    value2_.backward(ps_, vh1_.data(), dval_.data(), dh_.data(), mode);
    relu_backward(vz1_.data(), dh_.data(), dh_.data(), cfg_.head_width);
    value1_.backward(ps_, trunk_.data(), dh_.data(), dtrunk_v.data(), mode);

    adv2_.backward(ps_, ah1_.data(), dadv_.data(), dh_.data(), mode);
    relu_backward(az1_.data(), dh_.data(), dh_.data(), cfg_.head_width);
    adv1_.backward(ps_, trunk_.data(), dh_.data(), dtrunk_.data(), mode);

    for (std::size_t k = 0; k < trunk_.size(); ++k) dtrunk_[k] += dtrunk_v[k];

    encoder_.backward(ps_, obs.data() + cfg_.ego_features, dtrunk_.data() + cfg_.ego_features,
                      enc_ws_);
    return loss;
}

template <class S>
void DistributionalNet<S>::zero_grads() {
    ps_.zero_grads();
}

template <class S>
double DistributionalNet<S>::apply_gradients(AdamState<S>& adam, double learning_rate,
                                             double grad_clip) {
    const double norm = adam_step(ps_, adam, learning_rate, grad_clip);
    touch();
    return norm;
}

template <class S>
void DistributionalNet<S>::copy_params_from(const DistributionalNet& other) {
    ps_.values = other.ps_.values;
    touch();
}

template <class S>
ScalarNet<S>::ScalarNet(const NetworkConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    Rng rng(init_seed);
    encoder_.init(ps_, "encoder", cfg_, rng);
    fc1_.init(ps_, "fc1", cfg_.trunk_size(), cfg_.head_width, rng);
    fc2_.init(ps_, "fc2", cfg_.head_width, cfg_.action_count, rng);

    trunk_.resize(static_cast<std::size_t>(cfg_.trunk_size()));
    z1_.resize(static_cast<std::size_t>(cfg_.head_width));
    h1_.resize(static_cast<std::size_t>(cfg_.head_width));
    q_.resize(static_cast<std::size_t>(cfg_.action_count));
    dq_.resize(q_.size());
    dh1_.resize(z1_.size());
    dtrunk_.resize(trunk_.size());
}

template <class S>
void ScalarNet<S>::forward_internal(std::span<const S> obs) {
    if (static_cast<int>(obs.size()) != cfg_.input_size()) {
        throw std::invalid_argument("ScalarNet: observation size mismatch");
    }
    encoder_.forward(ps_, obs.data() + cfg_.ego_features, enc_ws_);
    for (int i = 0; i < cfg_.ego_features; ++i) trunk_[static_cast<std::size_t>(i)] = obs[static_cast<std::size_t>(i)];
    std::copy(enc_ws_.pooled.begin(), enc_ws_.pooled.end(), trunk_.begin() + cfg_.ego_features);
    fc1_.forward(ps_, trunk_.data(), z1_.data());
    relu_forward(z1_.data(), h1_.data(), cfg_.head_width);
    fc2_.forward(ps_, h1_.data(), q_.data());
}

template <class S>
void ScalarNet<S>::q_values(std::span<const S> obs, std::span<double> out) {
    forward_internal(obs);
    for (int a = 0; a < cfg_.action_count; ++a) out[static_cast<std::size_t>(a)] = static_cast<double>(q_[static_cast<std::size_t>(a)]);
}

template <class S>
double ScalarNet<S>::train_sample(std::span<const S> obs, int action, double target,
                                  double is_weight) {
    forward_internal(obs);
    const double err = static_cast<double>(q_[static_cast<std::size_t>(action)]) - target;
    double loss;
    double grad;
    if (std::abs(err) <= 1.0) {
        loss = 0.5 * err * err;
        grad = err;
    } else {
        loss = std::abs(err) - 0.5;
        grad = err > 0.0 ? 1.0 : -1.0;
    }
    std::fill(dq_.begin(), dq_.end(), S(0));
    dq_[static_cast<std::size_t>(action)] = static_cast<S>(grad * is_weight);

    fc2_.backward(ps_, h1_.data(), dq_.data(), dh1_.data());
    relu_backward(z1_.data(), dh1_.data(), dh1_.data(), cfg_.head_width);
    fc1_.backward(ps_, trunk_.data(), dh1_.data(), dtrunk_.data());
    encoder_.backward(ps_, obs.data() + cfg_.ego_features, dtrunk_.data() + cfg_.ego_features,
                      enc_ws_);
    return loss;
}

template <class S>
void ScalarNet<S>::zero_grads() {
    ps_.zero_grads();
}

template <class S>
double ScalarNet<S>::apply_gradients(AdamState<S>& adam, double learning_rate,
                                     double grad_clip) {
    return adam_step(ps_, adam, learning_rate, grad_clip);
}

template <class S>
void ScalarNet<S>::copy_params_from(const ScalarNet& other) {
    ps_.values = other.ps_.values;
}

template struct DenseLayer<float>;
template struct DenseLayer<double>;
template struct NoisyDenseLayer<float>;
template struct NoisyDenseLayer<double>;
template struct SlotEncoder<float>;
template struct SlotEncoder<double>;
template double adam_step<float>(ParamStore<float>&, AdamState<float>&, double, double);
template double adam_step<double>(ParamStore<double>&, AdamState<double>&, double, double);
template class DistributionalNet<float>;
template class DistributionalNet<double>;
template class ScalarNet<float>;
template class ScalarNet<double>;

}  // namespace highway
