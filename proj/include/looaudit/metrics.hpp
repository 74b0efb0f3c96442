#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "looaudit/dataset.hpp"
#include "looaudit/rules.hpp"
#include "looaudit/smoothing.hpp"

namespace looaudit {

// Baseline prediction for one evaluation point. probs is always per-class
// (binary models expanded to [P(0), P(1)]). Confidence: binary |P(1) - 0.5|,
// multiclass top-1 minus top-2 probability.
struct PredictionRecord {
    long point_id = -1;
    std::vector<double> probs;
    int label = 0;
    double confidence = 0.0;
};

// variant_tag of the comparison that attains the max: the removed point id
// in leave-one-out audits, the seed in seed-instability runs, the rule index
// in architecture runs; -1 when luf_value is 0.
struct LufEstimate {
    long point_id = -1;
    double luf_value = 0.0;
    long responsible_removed_id = -1;
    int num_leave_out_models = 0;
};

struct ConfidencePoint {
    double threshold = 0.0;
    double value = 0.0;      // expected LUF over points with confidence >= threshold
    std::size_t count = 0;   // points passing the threshold
};

struct FlipFraction {
    long removed_id = -1;
    double fraction = 0.0;  // mean per-point flip mass caused by this variant
};

struct LufReport {
    std::string mode;
    std::string rule_description;
    std::uint64_t rule_seed = 0;
    std::uint64_t split_seed = 0;
    int num_classes = 2;
    int trials = 0;          // randomized audits only
    double se_bound = 0.0;   // 1 / (2 sqrt(trials)) for randomized audits

    std::vector<PredictionRecord> baseline;
    std::vector<LufEstimate> estimates;
    double expected_luf = 0.0;
    std::vector<ConfidencePoint> confidence_curve;
    std::vector<FlipFraction> flip_fractions;
    std::vector<double> histogram_edges;        // 11 edges, 10 fixed-width bins
    std::vector<std::size_t> histogram_counts;
};

struct StabilityEstimate {
    double loo_stability_rate = 0.0;
    std::optional<double> dp_bound;  // e^eps - 1 + delta when the rule is DP
};

// Training hook so the harness can interpose caching and bookkeeping. The
// tag identifies the variant: -1 baseline, removed id / seed / rule index
// otherwise. Must be thread-safe; the default simply calls train().
using Trainer = std::function<Model(const LearningRule&, const DatasetView&, long tag)>;

struct AuditOptions {
    const SmoothingConfig* smoothing = nullptr;
    Trainer trainer;
    int parallelism = 1;
    bool eval_test_only = false;  // restrict evaluation to plan.test_ids
};

// Trains h_S and one variant per id in O, flags each evaluation point whose
// argmax changes under any removal. eval_ids empty means the whole dataset.
LufReport audit_deterministic(const LearningRule& rule, const Dataset& dataset,
                              const SplitPlan& plan, const std::vector<long>& eval_ids,
                              const AuditOptions& options = {});

// Monte Carlo audit for randomized rules: per variant, trains `trials`
// models with distinct randomness; per-class probabilities are empirical
// argmax frequencies. Deterministic rules collapse to audit_deterministic.
LufReport audit_randomized(const LearningRule& rule, const Dataset& dataset,
                           const SplitPlan& plan, const std::vector<long>& eval_ids,
                           int trials, const AuditOptions& options = {});

// Plug-in estimate of the 0-1 leave-one-out stability rate over O: the mean
// absolute change of a removed point's own loss.
StabilityEstimate loo_stability(const LearningRule& rule, const Dataset& dataset,
                                const SplitPlan& plan, const AuditOptions& options = {});

// e^epsilon - 1 + delta.
double dp_luf_bound(double epsilon, double delta);

// Exact per-point values by enumerating every leave-one-out variant of the
// view (O = S). Only cheap deterministic rules, |S| <= 64; otherwise refuses.
std::vector<LufEstimate> luf_oracle_at(const LearningRule& rule, const DatasetView& view,
                                       const Matrix& probes);
std::vector<LufEstimate> luf_oracle(const LearningRule& rule, const Dataset& dataset);

struct Prop2Verdict {
    double stability_rate = 0.0;
    double max_luf = 0.0;
    bool holds = false;  // stability_rate <= max_luf
};

// Checks that the exact stability rate is bounded by the max exact per-point
// value over the training points, on an oracle-sized instance.
Prop2Verdict prop2_check(const LearningRule& rule, const Dataset& dataset,
                         const SplitPlan& plan);

// Trains the same rule on the full training set under each seed; flips are
// measured against the first seed. Tags in the report are the seeds.
LufReport seed_instability(const LearningRule& rule, const Dataset& dataset,
                           const SplitPlan& plan, const std::vector<std::uint64_t>& seeds,
                           const std::vector<long>& eval_ids,
                           const AuditOptions& options = {});

// Trains each rule on the full training set with the first rule's seed;
// flips are measured against the first rule. Tags are rule indices.
LufReport architecture_instability(const std::vector<LearningRule>& rules,
                                   const Dataset& dataset, const SplitPlan& plan,
                                   const std::vector<long>& eval_ids,
                                   const AuditOptions& options = {});

}  // namespace looaudit
