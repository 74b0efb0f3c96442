#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "looaudit/dataset.hpp"
#include "looaudit/mlp.hpp"
#include "looaudit/optimizer.hpp"
#include "looaudit/rng.hpp"

namespace looaudit {

enum class RuleKind {
    standard_mlp,
    linear,
    pgd_adversarial,
    trades,
    knn,
    table_rule,
    noisy_majority,
};

enum class AttackNorm { l2, linf };

std::string rule_kind_name(RuleKind kind);

// Complete description of a learning rule. Given (kind + hyperparameters +
// seed + dataset view), training output is uniquely determined, except
// noisy-majority, which is randomized per invocation by design.
struct LearningRule {
    RuleKind kind = RuleKind::standard_mlp;
    std::vector<int> hidden_dims;
    int epochs = 100;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    AttackNorm attack_norm = AttackNorm::l2;
    double attack_radius = 0.0;
    int attack_steps = 10;
    double attack_step_size = 0.0;  // 0 selects 2.5 * radius / steps
    double trades_beta = 1.0;
    int k = 1;
    double dp_epsilon = 1.0;
    std::uint64_t seed = 0;

    // Canonical text form; feeds config/cache hashing.
    std::string canonical() const;
};

// Counterexample table rule over three fixed collinear points. Training
// subsets are identified by which distinct points are present.
namespace table {
constexpr double kPoints[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
constexpr int kLabels[3] = {0, 0, 1};
int predict(unsigned subset_mask, double px);
}  // namespace table

// Immutable trained predictor. The active members depend on kind.
struct Model {
    RuleKind kind = RuleKind::standard_mlp;
    int num_classes = 2;
    MlpParams params;                // mlp / linear / pgd / trades
    Matrix train_features;           // knn
    std::vector<int> train_labels;   // knn
    int k = 1;                       // knn
    unsigned table_subset_mask = 0;  // table rule
    int constant_label = -1;         // noisy majority outcome

    bool differentiable() const {
        return kind == RuleKind::standard_mlp || kind == RuleKind::linear ||
               kind == RuleKind::pgd_adversarial || kind == RuleKind::trades;
    }

    // B x 1 class-1 probability for binary models, B x k rows summing to 1
    // otherwise.
    Matrix predict_proba(const Matrix& x) const;
    std::vector<int> predict_labels(const Matrix& x) const;
};

// Trains by rule.kind; deterministic kinds are pure functions of
// (rule, view). Randomness for noisy-majority comes from rule.seed.
Model train(const LearningRule& rule, const DatasetView& view);

// Same, but the caller supplies the randomness used by randomized kinds
// (deterministic kinds ignore it). Used by Monte Carlo audits.
Model train_with_rng(const LearningRule& rule, const DatasetView& view, Rng& rng);

// Minimum distance between cross-class training points under the attack
// norm, the standard recipe for picking an adversarial radius; falls back to
// the 1st percentile of all cross-class distances when the minimum is 0.
double adversarial_radius(const DatasetView& view, AttackNorm norm);

}  // namespace looaudit
