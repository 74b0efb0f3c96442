#pragma once

#include <vector>

#include "looaudit/matrix.hpp"
#include "looaudit/rng.hpp"

namespace looaudit {

enum class LossKind {
    binary_cross_entropy,
    softmax_cross_entropy,
    zero_one,          // evaluation only, never differentiated
    trades_composite,  // natural loss + beta * KL; see backward_trades
};

// Fully-connected network: ReLU hidden layers, sigmoid output when the last
// width is 1 (binary), softmax otherwise. weights[l] has shape
// layer_dims[l+1] x layer_dims[l]; biases[l] has length layer_dims[l+1].
struct MlpParams {
    std::vector<int> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t num_layers() const { return weights.size(); }
    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    bool binary_output() const { return layer_dims.back() == 1; }
};

// Gradient container with the same shapes as MlpParams.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

MlpGrads zero_grads_like(const MlpParams& params);

// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero
// biases. Consumes the rng in a fixed order (layer by layer, row-major).
MlpParams init_params(const std::vector<int>& layer_dims, Rng& rng);

// Probabilities for a batch: B x 1 sigmoid column, or B x k softmax rows.
Matrix forward(const MlpParams& params, const Matrix& x_batch);

struct ForwardCache {
    std::vector<Matrix> preacts;      // z per layer
    std::vector<Matrix> activations;  // a0 = input, then post-ReLU per hidden layer
    Matrix probs;
};

ForwardCache forward_cached(const MlpParams& params, const Matrix& x_batch);

struct BackwardResult {
    double loss = 0.0;
    MlpGrads grads;
};

// Mean batch loss. zero_one is supported here (evaluation); trades_composite
// is not expressible from (x, y) alone — use trades_loss_value.
double loss_value(const MlpParams& params, const Matrix& x_batch,
                  const std::vector<int>& y_batch, LossKind kind);

// Exact analytic gradient of the mean batch loss. Throws UnsupportedError for
// zero_one and trades_composite (the latter needs backward_trades).
BackwardResult backward(const MlpParams& params, const Matrix& x_batch,
                        const std::vector<int>& y_batch, LossKind kind);

// Gradient of the summed (not mean) natural loss with respect to the inputs;
// each row is the gradient for that sample. Used by the PGD attack.
Matrix input_gradient_natural(const MlpParams& params, const Matrix& x_batch,
                              const std::vector<int>& y_batch);

// Gradient of sum_rows KL(p_ref_row || model(x_row)) with respect to x.
Matrix input_gradient_kl(const MlpParams& params, const Matrix& x_batch,
                         const Matrix& p_ref);

// Mean over rows of KL(p || q); p and q are probability outputs of forward().
double kl_divergence_mean(const Matrix& p, const Matrix& q);

// TRADES composite: mean natural loss at x plus beta * mean KL(p(x) || p(x_adv)).
double trades_loss_value(const MlpParams& params, const Matrix& x_batch,
                         const Matrix& x_adv_batch, const std::vector<int>& y_batch,
                         double beta);

// Full parameter gradient of the TRADES composite (both KL branches).
BackwardResult backward_trades(const MlpParams& params, const Matrix& x_batch,
                               const Matrix& x_adv_batch, const std::vector<int>& y_batch,
                               double beta);

// Argmax labels from a probability matrix; binary column treated as the
// class-1 probability. Ties resolve to the lowest class index.
std::vector<int> probs_to_labels(const Matrix& probs);

// Expand a B x 1 sigmoid column into B x 2 [P(0), P(1)]; pass through rows
// that are already per-class.
Matrix expand_binary_probs(const Matrix& probs);

// 0-1 loss of a single prediction row against a label.
int zero_one_loss(const Matrix& probs, std::size_t row, int label);

}  // namespace looaudit
