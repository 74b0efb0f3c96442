#include "looaudit/attack.hpp"

#include <cmath>

#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

double sign(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

// One normalized ascent step per row (l2: unit gradient, linf: sign).
void ascent_step(Matrix& adv, const Matrix& grad, AttackNorm norm, double step_size) {
    for (std::size_t i = 0; i < adv.rows(); ++i) {
        const double* g = grad.row_ptr(i);
        double* a = adv.row_ptr(i);
        if (norm == AttackNorm::l2) {
            double ss = 0.0;
            for (std::size_t j = 0; j < adv.cols(); ++j) {
                ss += g[j] * g[j];
            }
            if (ss == 0.0) {
                continue;
            }
            double scale = step_size / std::sqrt(ss);
            for (std::size_t j = 0; j < adv.cols(); ++j) {
                a[j] += scale * g[j];
            }
        } else {
            for (std::size_t j = 0; j < adv.cols(); ++j) {
                a[j] += step_size * sign(g[j]);
            }
        }
    }
}

double resolve_step_size(double radius, int steps, double step_size) {
    if (step_size > 0.0) {
        return step_size;
    }
    return 2.5 * radius / static_cast<double>(steps);
}

void check_attack_args(double radius, int steps) {
    if (radius < 0.0 || !std::isfinite(radius)) {
        throw ArgumentError("attack radius must be finite and non-negative");
    }
    if (steps < 1) {
        throw ArgumentError("attack needs at least one step");
    }
}

}  // namespace

void project_to_ball(Matrix& adv, const Matrix& x, AttackNorm norm, double radius) {
    if (!adv.same_shape(x)) {
        throw DimensionError("projection shapes differ");
    }
    for (std::size_t i = 0; i < adv.rows(); ++i) {
        double* a = adv.row_ptr(i);
        const double* o = x.row_ptr(i);
        if (norm == AttackNorm::l2) {
            double ss = 0.0;
            for (std::size_t j = 0; j < adv.cols(); ++j) {
                double d = a[j] - o[j];
                ss += d * d;
            }
            double dist = std::sqrt(ss);
            if (dist > radius) {
                double scale = radius / dist;
                for (std::size_t j = 0; j < adv.cols(); ++j) {
                    a[j] = o[j] + (a[j] - o[j]) * scale;
                }
            }
        } else {
            for (std::size_t j = 0; j < adv.cols(); ++j) {
                a[j] = std::min(std::max(a[j], o[j] - radius), o[j] + radius);
            }
        }
    }
}

Matrix pgd_attack_params(const MlpParams& params, const Matrix& x,
                         const std::vector<int>& y, AttackNorm norm, double radius,
                         int steps, double step_size) {
    check_attack_args(radius, steps);
    if (radius == 0.0) {
        return x;
    }
    double step = resolve_step_size(radius, steps, step_size);
    Matrix adv = x;
    for (int s = 0; s < steps; ++s) {
        Matrix grad = input_gradient_natural(params, adv, y);
        ascent_step(adv, grad, norm, step);
        project_to_ball(adv, x, norm, radius);
    }
    return adv;
}

Matrix pgd_attack(const Model& model, const Matrix& x, const std::vector<int>& y,
                  AttackNorm norm, double radius, int steps, double step_size) {
    if (!model.differentiable()) {
        throw UnsupportedError("PGD needs a differentiable model, got " +
                               rule_kind_name(model.kind));
    }
    return pgd_attack_params(model.params, x, y, norm, radius, steps, step_size);
}

Matrix trades_attack(const MlpParams& params, const Matrix& x, AttackNorm norm,
                     double radius, int steps, double step_size, Rng& start_rng) {
    check_attack_args(radius, steps);
    if (radius == 0.0) {
        return x;
    }
    double step = resolve_step_size(radius, steps, step_size);
    Matrix p_ref = forward(params, x);
    Matrix adv = x;
    for (std::size_t i = 0; i < adv.rows(); ++i) {
        for (std::size_t j = 0; j < adv.cols(); ++j) {
            adv.at(i, j) += 0.001 * start_rng.next_gaussian();
        }
    }
    project_to_ball(adv, x, norm, radius);
    for (int s = 0; s < steps; ++s) {
        Matrix grad = input_gradient_kl(params, adv, p_ref);
        ascent_step(adv, grad, norm, step);
        project_to_ball(adv, x, norm, radius);
    }
    return adv;
}

}  // namespace looaudit
