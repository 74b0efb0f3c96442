#include "looaudit/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

constexpr double kProbClip = 1e-12;

double clip_prob(double p) {
    return std::min(std::max(p, kProbClip), 1.0 - kProbClip);
}

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

void check_input(const MlpParams& params, const Matrix& x_batch) {
    if (x_batch.cols() != static_cast<std::size_t>(params.input_dim())) {
        throw DimensionError("input batch has " + std::to_string(x_batch.cols()) +
                             " columns, network expects " +
                             std::to_string(params.input_dim()));
    }
    if (x_batch.rows() == 0) {
        throw DimensionError("input batch is empty");
    }
}

void check_labels(const MlpParams& params, const Matrix& x_batch,
                  const std::vector<int>& y_batch) {
    if (y_batch.size() != x_batch.rows()) {
        throw DimensionError("label count " + std::to_string(y_batch.size()) +
                             " does not match batch rows " +
                             std::to_string(x_batch.rows()));
    }
    int num_classes = params.binary_output() ? 2 : params.output_dim();
    for (std::size_t i = 0; i < y_batch.size(); ++i) {
        if (y_batch[i] < 0 || y_batch[i] >= num_classes) {
            throw ArgumentError("label " + std::to_string(y_batch[i]) +
                                " at row " + std::to_string(i) +
                                " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

// Applies the output nonlinearity to the final pre-activation in place.
Matrix output_probs(const MlpParams& params, const Matrix& z_out) {
    std::size_t rows = z_out.rows();
    if (params.binary_output()) {
        Matrix probs(rows, 1);
        for (std::size_t i = 0; i < rows; ++i) {
            probs.at(i, 0) = stable_sigmoid(z_out.at(i, 0));
        }
        return probs;
    }
    std::size_t k = z_out.cols();
    Matrix probs(rows, k);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* zi = z_out.row_ptr(i);
        double zmax = zi[0];
        for (std::size_t j = 1; j < k; ++j) {
            zmax = std::max(zmax, zi[j]);
        }
        double total = 0.0;
        double* pi = probs.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) {
            pi[j] = std::exp(zi[j] - zmax);
            total += pi[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            pi[j] /= total;
        }
    }
    return probs;
}

// dL/dz at the output layer for the mean natural loss, scaled by `scale`
// (1/B for parameter gradients, 1 for summed input gradients).
Matrix natural_output_delta(const MlpParams& params, const Matrix& probs,
                            const std::vector<int>& y_batch, double scale) {
    std::size_t rows = probs.rows();
    if (params.binary_output()) {
        Matrix delta(rows, 1);
        for (std::size_t i = 0; i < rows; ++i) {
            delta.at(i, 0) = (probs.at(i, 0) - static_cast<double>(y_batch[i])) * scale;
        }
        return delta;
    }
    std::size_t k = probs.cols();
    Matrix delta(rows, k);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double target = (static_cast<int>(j) == y_batch[i]) ? 1.0 : 0.0;
            delta.at(i, j) = (probs.at(i, j) - target) * scale;
        }
    }
    return delta;
}

// dKL(p_ref || q)/dz_q = q - p_ref for both sigmoid and softmax outputs.
Matrix kl_q_delta(const Matrix& q, const Matrix& p_ref, double scale) {
    Matrix delta(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < q.cols(); ++j) {
            delta.at(i, j) = (q.at(i, j) - p_ref.at(i, j)) * scale;
        }
    }
    return delta;
}

// dKL(p || q)/dz_p with q held fixed.
Matrix kl_p_delta(const MlpParams& params, const Matrix& p, const Matrix& q,
                  double scale) {
    std::size_t rows = p.rows();
    if (params.binary_output()) {
        Matrix delta(rows, 1);
        for (std::size_t i = 0; i < rows; ++i) {
            double pi = p.at(i, 0);
            double qi = q.at(i, 0);
            double g = std::log(clip_prob(pi)) - std::log(clip_prob(qi)) -
                       (std::log(clip_prob(1.0 - pi)) - std::log(clip_prob(1.0 - qi)));
            delta.at(i, 0) = g * pi * (1.0 - pi) * scale;
        }
        return delta;
    }
    std::size_t k = p.cols();
    Matrix delta(rows, k);
    for (std::size_t i = 0; i < rows; ++i) {
        // dz_j = p_j * (g_j - sum_i g_i p_i), g_i = log(p_i / q_i).
        std::vector<double> g(k);
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = std::log(clip_prob(p.at(i, j))) - std::log(clip_prob(q.at(i, j)));
            dot += g[j] * p.at(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) {
            delta.at(i, j) = p.at(i, j) * (g[j] - dot) * scale;
        }
    }
    return delta;
}

// Backpropagates an output-layer delta through the cache. Accumulates
// parameter gradients into `grads` when non-null; returns dL/d(input) when
// `want_input_grad` is set, otherwise an empty matrix.
Matrix backprop(const MlpParams& params, const ForwardCache& cache,
                Matrix delta, MlpGrads* grads, bool want_input_grad) {
    for (std::size_t l = params.num_layers(); l-- > 0;) {
        const Matrix& a_prev = cache.activations[l];
        const Matrix& w = params.weights[l];
        std::size_t out_dim = w.rows();
        std::size_t in_dim = w.cols();
        std::size_t batch = delta.rows();

        if (grads != nullptr) {
            Matrix& gw = grads->weights[l];
            std::vector<double>& gb = grads->biases[l];
            for (std::size_t i = 0; i < batch; ++i) {
                const double* di = delta.row_ptr(i);
                const double* ai = a_prev.row_ptr(i);
                for (std::size_t j = 0; j < out_dim; ++j) {
                    double dij = di[j];
                    gb[j] += dij;
                    double* gwj = gw.row_ptr(j);
                    for (std::size_t c = 0; c < in_dim; ++c) {
                        gwj[c] += dij * ai[c];
                    }
                }
            }
        }

        if (l == 0 && !want_input_grad) {
            return Matrix();
        }

        Matrix prev(batch, in_dim);
        for (std::size_t i = 0; i < batch; ++i) {
            const double* di = delta.row_ptr(i);
            double* pi = prev.row_ptr(i);
            for (std::size_t c = 0; c < in_dim; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < out_dim; ++j) {
                    acc += di[j] * w.at(j, c);
                }
                pi[c] = acc;
            }
        }
        if (l > 0) {
            const Matrix& z_prev = cache.preacts[l - 1];
            for (std::size_t i = 0; i < batch; ++i) {
                for (std::size_t c = 0; c < in_dim; ++c) {
                    if (z_prev.at(i, c) <= 0.0) {
                        prev.at(i, c) = 0.0;
                    }
                }
            }
        }
        delta = std::move(prev);
    }
    return delta;
}

double natural_loss_from_probs(const MlpParams& params, const Matrix& probs,
                               const std::vector<int>& y_batch) {
    std::size_t rows = probs.rows();
    double total = 0.0;
    if (params.binary_output()) {
        for (std::size_t i = 0; i < rows; ++i) {
            double p = probs.at(i, 0);
            total += (y_batch[i] == 1) ? -std::log(clip_prob(p))
                                       : -std::log(clip_prob(1.0 - p));
        }
    } else {
        for (std::size_t i = 0; i < rows; ++i) {
            total += -std::log(clip_prob(probs.at(i, static_cast<std::size_t>(y_batch[i]))));
        }
    }
    return total / static_cast<double>(rows);
}

}  // namespace

MlpGrads zero_grads_like(const MlpParams& params) {
    MlpGrads grads;
    grads.weights.reserve(params.num_layers());
    grads.biases.reserve(params.num_layers());
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        grads.weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
        grads.biases.emplace_back(params.biases[l].size(), 0.0);
    }
    return grads;
}

MlpParams init_params(const std::vector<int>& layer_dims, Rng& rng) {
    if (layer_dims.size() < 2) {
        throw ArgumentError("network needs at least input and output dims");
    }
    for (int d : layer_dims) {
        if (d <= 0) {
            throw ArgumentError("layer width must be positive, got " + std::to_string(d));
        }
    }
    MlpParams params;
    params.layer_dims = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        std::size_t fan_in = static_cast<std::size_t>(layer_dims[l]);
        std::size_t fan_out = static_cast<std::size_t>(layer_dims[l + 1]);
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (std::size_t r = 0; r < fan_out; ++r) {
            for (std::size_t c = 0; c < fan_in; ++c) {
                w.at(r, c) = rng.next_uniform(-bound, bound);
            }
        }
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

ForwardCache forward_cached(const MlpParams& params, const Matrix& x_batch) {
    check_input(params, x_batch);
    ForwardCache cache;
    cache.activations.reserve(params.num_layers());
    cache.preacts.reserve(params.num_layers());
    cache.activations.push_back(x_batch);
    Matrix a = x_batch;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        Matrix z = affine_transposed(a, params.weights[l], params.biases[l]);
        if (l + 1 < params.num_layers()) {
            a = z;
            for (std::size_t i = 0; i < a.rows(); ++i) {
                for (std::size_t j = 0; j < a.cols(); ++j) {
                    a.at(i, j) = std::max(a.at(i, j), 0.0);
                }
            }
            cache.activations.push_back(a);
        } else {
            cache.probs = output_probs(params, z);
        }
        cache.preacts.push_back(std::move(z));
    }
    return cache;
}

Matrix forward(const MlpParams& params, const Matrix& x_batch) {
    return forward_cached(params, x_batch).probs;
}

double loss_value(const MlpParams& params, const Matrix& x_batch,
                  const std::vector<int>& y_batch, LossKind kind) {
    check_labels(params, x_batch, y_batch);
    Matrix probs = forward(params, x_batch);
    switch (kind) {
        case LossKind::binary_cross_entropy:
        case LossKind::softmax_cross_entropy:
            return natural_loss_from_probs(params, probs, y_batch);
        case LossKind::zero_one: {
            double total = 0.0;
            for (std::size_t i = 0; i < probs.rows(); ++i) {
                total += zero_one_loss(probs, i, y_batch[i]);
            }
            return total / static_cast<double>(probs.rows());
        }
        case LossKind::trades_composite:
            throw UnsupportedError(
                "trades_composite needs an adversarial batch; use trades_loss_value");
    }
    throw UnsupportedError("unknown loss kind");
}

BackwardResult backward(const MlpParams& params, const Matrix& x_batch,
                        const std::vector<int>& y_batch, LossKind kind) {
    check_labels(params, x_batch, y_batch);
    if (kind == LossKind::zero_one) {
        throw UnsupportedError("zero_one loss has no gradient");
    }
    if (kind == LossKind::trades_composite) {
        throw UnsupportedError("trades_composite gradient requires backward_trades");
    }
    ForwardCache cache = forward_cached(params, x_batch);
    double scale = 1.0 / static_cast<double>(x_batch.rows());
    Matrix delta = natural_output_delta(params, cache.probs, y_batch, scale);

    BackwardResult result;
    result.loss = natural_loss_from_probs(params, cache.probs, y_batch);
    result.grads = zero_grads_like(params);
    backprop(params, cache, std::move(delta), &result.grads, false);
    return result;
}

Matrix input_gradient_natural(const MlpParams& params, const Matrix& x_batch,
                              const std::vector<int>& y_batch) {
    check_labels(params, x_batch, y_batch);
    ForwardCache cache = forward_cached(params, x_batch);
    Matrix delta = natural_output_delta(params, cache.probs, y_batch, 1.0);
    return backprop(params, cache, std::move(delta), nullptr, true);
}

Matrix input_gradient_kl(const MlpParams& params, const Matrix& x_batch,
                         const Matrix& p_ref) {
    check_input(params, x_batch);
    ForwardCache cache = forward_cached(params, x_batch);
    if (!p_ref.same_shape(cache.probs)) {
        throw DimensionError("reference probabilities do not match model output shape");
    }
    Matrix delta = kl_q_delta(cache.probs, p_ref, 1.0);
    return backprop(params, cache, std::move(delta), nullptr, true);
}

double kl_divergence_mean(const Matrix& p, const Matrix& q) {
    if (!p.same_shape(q)) {
        throw DimensionError("KL arguments must share a shape");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        if (p.cols() == 1) {
            double pi = p.at(i, 0);
            double qi = q.at(i, 0);
            total += pi * (std::log(clip_prob(pi)) - std::log(clip_prob(qi)));
            total += (1.0 - pi) *
                     (std::log(clip_prob(1.0 - pi)) - std::log(clip_prob(1.0 - qi)));
        } else {
            for (std::size_t j = 0; j < p.cols(); ++j) {
                total += p.at(i, j) *
                         (std::log(clip_prob(p.at(i, j))) - std::log(clip_prob(q.at(i, j))));
            }
        }
    }
    return total / static_cast<double>(p.rows());
}

double trades_loss_value(const MlpParams& params, const Matrix& x_batch,
                         const Matrix& x_adv_batch, const std::vector<int>& y_batch,
                         double beta) {
    check_labels(params, x_batch, y_batch);
    Matrix p = forward(params, x_batch);
    Matrix q = forward(params, x_adv_batch);
    return natural_loss_from_probs(params, p, y_batch) + beta * kl_divergence_mean(p, q);
}

BackwardResult backward_trades(const MlpParams& params, const Matrix& x_batch,
                               const Matrix& x_adv_batch, const std::vector<int>& y_batch,
                               double beta) {
    check_labels(params, x_batch, y_batch);
    ForwardCache clean = forward_cached(params, x_batch);
    ForwardCache adv = forward_cached(params, x_adv_batch);
    double scale = 1.0 / static_cast<double>(x_batch.rows());

    BackwardResult result;
    result.loss = natural_loss_from_probs(params, clean.probs, y_batch) +
                  beta * kl_divergence_mean(clean.probs, adv.probs);
    result.grads = zero_grads_like(params);

    Matrix delta_clean = natural_output_delta(params, clean.probs, y_batch, scale);
    Matrix delta_p = kl_p_delta(params, clean.probs, adv.probs, beta * scale);
    for (std::size_t i = 0; i < delta_clean.rows(); ++i) {
        for (std::size_t j = 0; j < delta_clean.cols(); ++j) {
            delta_clean.at(i, j) += delta_p.at(i, j);
        }
    }
    backprop(params, clean, std::move(delta_clean), &result.grads, false);

    Matrix delta_adv = kl_q_delta(adv.probs, clean.probs, beta * scale);
    backprop(params, adv, std::move(delta_adv), &result.grads, false);
    return result;
}

std::vector<int> probs_to_labels(const Matrix& probs) {
    std::vector<int> labels(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (probs.cols() == 1) {
            labels[i] = (probs.at(i, 0) > 0.5) ? 1 : 0;
        } else {
            std::size_t best = 0;
            for (std::size_t j = 1; j < probs.cols(); ++j) {
                if (probs.at(i, j) > probs.at(i, best)) {
                    best = j;
                }
            }
            labels[i] = static_cast<int>(best);
        }
    }
    return labels;
}

Matrix expand_binary_probs(const Matrix& probs) {
    if (probs.cols() != 1) {
        return probs;
    }
    Matrix out(probs.rows(), 2);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        out.at(i, 0) = 1.0 - probs.at(i, 0);
        out.at(i, 1) = probs.at(i, 0);
    }
    return out;
}

int zero_one_loss(const Matrix& probs, std::size_t row, int label) {
    int predicted;
    if (probs.cols() == 1) {
        predicted = (probs.at(row, 0) > 0.5) ? 1 : 0;
    } else {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols(); ++j) {
            if (probs.at(row, j) > probs.at(row, best)) {
                best = j;
            }
        }
        predicted = static_cast<int>(best);
    }
    return (predicted == label) ? 0 : 1;
}

}  // namespace looaudit
