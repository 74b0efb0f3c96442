#pragma once

#include <cstdint>

#include "looaudit/rules.hpp"

namespace looaudit {

enum class NoisePairing { common_random_numbers, independent };

struct SmoothingConfig {
    double sigma_squared = 0.1;
    int num_samples = 1000;
    std::uint64_t noise_seed = 0;
    NoisePairing pairing = NoisePairing::common_random_numbers;
};

// Majority-vote smoothing: class k probability is the fraction of
// num_samples draws x + eta, eta ~ N(0, sigma^2 I), whose base-model argmax
// is k. Each call restarts the noise stream from noise_seed, so with
// common-random-numbers pairing every model in an audit sees the identical
// noise sequence. Returns B x num_classes rows.
Matrix smooth_predict(const Model& model, const SmoothingConfig& config, const Matrix& x);

}  // namespace looaudit
