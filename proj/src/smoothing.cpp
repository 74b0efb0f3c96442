#include "looaudit/smoothing.hpp"

#include <cmath>

#include "looaudit/errors.hpp"

namespace looaudit {

Matrix smooth_predict(const Model& model, const SmoothingConfig& config, const Matrix& x) {
    if (!(config.sigma_squared > 0.0)) {
        throw ConfigError("smoothing sigma_squared must be positive");
    }
    if (config.num_samples < 1) {
        throw ConfigError("smoothing needs at least one sample");
    }
    double sigma = std::sqrt(config.sigma_squared);
    std::size_t k = static_cast<std::size_t>(model.num_classes);
    Matrix counts(x.rows(), k);
    Rng rng = Rng::derive(config.noise_seed, Stream::noise);
    Matrix noisy(x.rows(), x.cols());
    for (int s = 0; s < config.num_samples; ++s) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                noisy.at(i, j) = x.at(i, j) + sigma * rng.next_gaussian();
            }
        }
        std::vector<int> labels = model.predict_labels(noisy);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            counts.at(i, static_cast<std::size_t>(labels[i])) += 1.0;
        }
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            counts.at(i, j) /= static_cast<double>(config.num_samples);
        }
    }
    return counts;
}

}  // namespace looaudit
