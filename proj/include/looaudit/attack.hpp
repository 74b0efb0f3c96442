#pragma once

#include "looaudit/mlp.hpp"
#include "looaudit/rng.hpp"
#include "looaudit/rules.hpp"

namespace looaudit {

// Projects each row of adv into the norm ball of the given radius around the
// matching row of x (l2: radial scaling, linf: coordinate clamp).
void project_to_ball(Matrix& adv, const Matrix& x, AttackNorm norm, double radius);

// Projected gradient ascent on the natural loss. Deterministic: no random
// start. radius 0 returns x unchanged; step_size 0 selects 2.5*radius/steps.
Matrix pgd_attack_params(const MlpParams& params, const Matrix& x,
                         const std::vector<int>& y, AttackNorm norm, double radius,
                         int steps, double step_size);

// Model-level wrapper; rejects non-differentiable models.
Matrix pgd_attack(const Model& model, const Matrix& x, const std::vector<int>& y,
                  AttackNorm norm, double radius, int steps, double step_size);

// Inner maximization of KL(p(x) || p(x + delta)) for TRADES. The KL gradient
// vanishes at delta = 0, so the iterate starts at x + 0.001 * Gaussian drawn
// from start_rng; radius 0 returns x exactly.
Matrix trades_attack(const MlpParams& params, const Matrix& x, AttackNorm norm,
                     double radius, int steps, double step_size, Rng& start_rng);

}  // namespace looaudit
