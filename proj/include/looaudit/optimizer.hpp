#pragma once

#include <vector>

#include "looaudit/mlp.hpp"

namespace looaudit {

enum class OptimizerKind { sgd, adam };

// Per-parameter moment buffers for Adam; empty for SGD. step counts completed
// updates and drives Adam bias correction.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<Matrix> m_weights;
    std::vector<Matrix> v_weights;
    std::vector<std::vector<double>> m_biases;
    std::vector<std::vector<double>> v_biases;
};

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              const MlpParams& params);

// Applies one update in place and increments state.step. Throws NumericError
// with the offending layer index when a gradient entry is not finite.
void optimizer_step(OptimizerState& state, MlpParams& params, const MlpGrads& grads);

}  // namespace looaudit
