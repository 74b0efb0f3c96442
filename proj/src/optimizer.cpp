#include "looaudit/optimizer.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

void check_finite(const MlpGrads& grads, std::size_t num_layers) {
    for (std::size_t l = 0; l < num_layers; ++l) {
        if (!grads.weights[l].all_finite()) {
            throw NumericError("non-finite weight gradient", static_cast<int>(l));
        }
        for (double g : grads.biases[l]) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite bias gradient", static_cast<int>(l));
            }
        }
    }
}

void adam_update(double* param, double* m, double* v, double g,
                 const OptimizerState& s, double bc1, double bc2) {
    *m = s.beta1 * *m + (1.0 - s.beta1) * g;
    *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
    double m_hat = *m / bc1;
    double v_hat = *v / bc2;
    *param -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
}

}  // namespace

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              const MlpParams& params) {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ArgumentError("learning rate must be positive and finite");
    }
    OptimizerState state;
    state.kind = kind;
    state.learning_rate = learning_rate;
    if (kind == OptimizerKind::adam) {
        for (std::size_t l = 0; l < params.num_layers(); ++l) {
            state.m_weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
            state.v_weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
            state.m_biases.emplace_back(params.biases[l].size(), 0.0);
            state.v_biases.emplace_back(params.biases[l].size(), 0.0);
        }
    }
    return state;
}

void optimizer_step(OptimizerState& state, MlpParams& params, const MlpGrads& grads) {
    std::size_t num_layers = params.num_layers();
    if (grads.weights.size() != num_layers || grads.biases.size() != num_layers) {
        throw DimensionError("gradient layer count does not match parameters");
    }
    for (std::size_t l = 0; l < num_layers; ++l) {
        if (!grads.weights[l].same_shape(params.weights[l]) ||
            grads.biases[l].size() != params.biases[l].size()) {
            throw DimensionError("gradient shape mismatch at layer " + std::to_string(l));
        }
    }
    check_finite(grads, num_layers);

    if (state.kind == OptimizerKind::sgd) {
        for (std::size_t l = 0; l < num_layers; ++l) {
            double* w = params.weights[l].data();
            const double* g = grads.weights[l].data();
            std::size_t n = params.weights[l].size();
            for (std::size_t i = 0; i < n; ++i) {
                w[i] -= state.learning_rate * g[i];
            }
            for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
                params.biases[l][i] -= state.learning_rate * grads.biases[l][i];
            }
        }
        ++state.step;
        return;
    }

    long t = state.step + 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < num_layers; ++l) {
        double* w = params.weights[l].data();
        double* mw = state.m_weights[l].data();
        double* vw = state.v_weights[l].data();
        const double* g = grads.weights[l].data();
        std::size_t n = params.weights[l].size();
        for (std::size_t i = 0; i < n; ++i) {
            adam_update(&w[i], &mw[i], &vw[i], g[i], state, bc1, bc2);
        }
        for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
            adam_update(&params.biases[l][i], &state.m_biases[l][i],
                        &state.v_biases[l][i], grads.biases[l][i], state, bc1, bc2);
        }
    }
    ++state.step;
}

}  // namespace looaudit
