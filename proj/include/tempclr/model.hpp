#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempclr/seqcore.hpp"

namespace tempclr {

enum class Activation { identity, relu };

inline std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

inline Activation parse_activation(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

// Which branch a unit goes through: captions / anchor frames, or clips.
enum class Side { anchor, positive };

struct ModelSpec {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;  // 0 = single affine layer
    std::size_t output_dim = 0;
    Activation activation = Activation::identity;
    bool twin = false;  // separate head per side
    std::uint64_t seed = 0;
};

// Per-unit affine map (optionally one hidden layer) applied before alignment.
// Parameters live in one flat vector so the optimizer, the checkpoint writer
// and gradient checks can treat them uniformly. Layout per head and layer:
// weight (out x in, row-major) followed by bias (out).
class ProjectionModel {
public:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t weight_offset = 0;
        std::size_t bias_offset = 0;
    };

    // Inputs and pre-activations of every layer for one unit.
    struct Trace {
        std::vector<std::vector<double>> inputs;
        std::vector<std::vector<double>> pre;
    };

    ProjectionModel() = default;

    explicit ProjectionModel(const ModelSpec& spec) : spec_{spec} {
        if (spec.input_dim == 0 || spec.output_dim == 0) throw std::invalid_argument("ModelSpec: zero dimension");
        const std::size_t heads = spec.twin ? 2 : 1;
        for (std::size_t h = 0; h < heads; ++h) {
            std::vector<Layer> layers;
            if (spec.hidden_dim > 0) {
                layers.push_back(add_layer(spec.input_dim, spec.hidden_dim));
                layers.push_back(add_layer(spec.hidden_dim, spec.output_dim));
            } else {
                layers.push_back(add_layer(spec.input_dim, spec.output_dim));
            }
            heads_.push_back(std::move(layers));
        }
        initialize();
    }

    // Square single-layer model initialised to the identity map.
    static ProjectionModel identity(std::size_t dim, bool twin = false) {
        return ProjectionModel(ModelSpec{dim, 0, dim, Activation::identity, twin, 0});
    }

    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t input_dim() const { return spec_.input_dim; }
    [[nodiscard]] std::size_t output_dim() const { return spec_.output_dim; }
    [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }
    [[nodiscard]] std::span<double> parameters() { return params_; }
    [[nodiscard]] std::span<const double> parameters() const { return params_; }
    [[nodiscard]] const std::vector<std::vector<Layer>>& heads() const { return heads_; }

    [[nodiscard]] std::vector<double> forward(Side side, std::span<const double> x, Trace* trace = nullptr) const {
        if (x.size() != spec_.input_dim) {
            throw DataError("projection: input dim " + std::to_string(x.size()) + " != model dim " +
                            std::to_string(spec_.input_dim));
        }
        const auto& layers = head(side);
        std::vector<double> cur(x.begin(), x.end());
        if (trace) {
            trace->inputs.clear();
            trace->pre.clear();
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer& L = layers[l];
            std::vector<double> z(L.out);
            for (std::size_t o = 0; o < L.out; ++o) {
                double s = params_[L.bias_offset + o];
                const double* w = &params_[L.weight_offset + o * L.in];
                for (std::size_t k = 0; k < L.in; ++k) s += w[k] * cur[k];
                z[o] = s;
            }
            if (trace) {
                trace->inputs.push_back(cur);
                trace->pre.push_back(z);
            }
            if (l + 1 < layers.size() && spec_.activation == Activation::relu) {
                for (double& v : z) v = std::max(0.0, v);
            }
            cur = std::move(z);
        }
        return cur;
    }

    // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    void backward(Side side, const Trace& trace, std::span<const double> grad_out, std::span<double> grad) const {
        const auto& layers = head(side);
        std::vector<double> g(grad_out.begin(), grad_out.end());
        for (std::size_t l = layers.size(); l-- > 0;) {
            const Layer& L = layers[l];
            if (l + 1 < layers.size() && spec_.activation == Activation::relu) {
                for (std::size_t o = 0; o < L.out; ++o) {
                    if (trace.pre[l][o] <= 0.0) g[o] = 0.0;
                }
            }
            const auto& in = trace.inputs[l];
            std::vector<double> g_in(L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
                if (g[o] == 0.0) continue;
                grad[L.bias_offset + o] += g[o];
                const double* w = &params_[L.weight_offset + o * L.in];
                double* gw = &grad[L.weight_offset + o * L.in];
                for (std::size_t k = 0; k < L.in; ++k) {
                    gw[k] += g[o] * in[k];
                    g_in[k] += g[o] * w[k];
                }
            }
            g = std::move(g_in);
        }
    }

    [[nodiscard]] EmbeddingSequence project(const EmbeddingSequence& seq, Side side) const {
        Matrix out(seq.size(), spec_.output_dim);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const auto y = forward(side, seq.unit(i));
            std::copy(y.begin(), y.end(), out.row(i).begin());
        }
        return {seq.id, std::move(out)};
    }

    friend bool operator==(const ProjectionModel& a, const ProjectionModel& b) {
        return a.params_ == b.params_ && a.spec_.input_dim == b.spec_.input_dim &&
               a.spec_.hidden_dim == b.spec_.hidden_dim && a.spec_.output_dim == b.spec_.output_dim &&
               a.spec_.activation == b.spec_.activation && a.spec_.twin == b.spec_.twin;
    }

private:
    const std::vector<Layer>& head(Side side) const {
        return (side == Side::positive && heads_.size() > 1) ? heads_[1] : heads_[0];
    }

    Layer add_layer(std::size_t in, std::size_t out) {
        Layer L{in, out, params_.size(), params_.size() + in * out};
        params_.resize(params_.size() + in * out + out, 0.0);
        return L;
    }

    // Identity for square single-layer heads, otherwise seeded Gaussian
    // weights with variance 1/in and zero biases.
    void initialize() {
        std::mt19937_64 rng(spec_.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (const auto& layers : heads_) {
            for (const auto& L : layers) {
                if (layers.size() == 1 && L.in == L.out) {
                    for (std::size_t k = 0; k < L.in; ++k) params_[L.weight_offset + k * L.in + k] = 1.0;
                    continue;
                }
                const double scale = 1.0 / std::sqrt(static_cast<double>(L.in));
                for (std::size_t k = 0; k < L.in * L.out; ++k) params_[L.weight_offset + k] = scale * normal(rng);
            }
        }
    }

    ModelSpec spec_;
    std::vector<std::vector<Layer>> heads_;
    std::vector<double> params_;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
};

// Bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k];
        const double m_hat = state.m[k] / c1;
        const double v_hat = state.v[k] / c2;
        params[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace tempclr
