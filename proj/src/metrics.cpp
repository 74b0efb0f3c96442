#include "looaudit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "looaudit/errors.hpp"
#include "looaudit/hash.hpp"
#include "looaudit/parallel.hpp"

namespace looaudit {
namespace {

Model default_train(const LearningRule& rule, const DatasetView& view, long tag) {
    (void)tag;
    return train(rule, view);
}

Trainer resolve_trainer(const AuditOptions& options) {
    return options.trainer ? options.trainer : default_train;
}

std::vector<long> resolve_eval_ids(const Dataset& dataset, const SplitPlan& plan,
                                   const std::vector<long>& eval_ids,
                                   const AuditOptions& options) {
    if (!eval_ids.empty()) {
        return eval_ids;
    }
    if (options.eval_test_only) {
        if (plan.test_ids.empty()) {
            throw ConfigError("test-only evaluation requested but the test set is empty");
        }
        return plan.test_ids;
    }
    return dataset.point_ids;
}

Matrix gather_by_ids(const Dataset& dataset, const std::vector<long>& ids) {
    return view_of_ids(dataset, ids).gather_features();
}

double confidence_of(const std::vector<double>& probs) {
    if (probs.size() == 2) {
        return std::abs(probs[1] - 0.5);
    }
    double top1 = 0.0;
    double top2 = 0.0;
    for (double p : probs) {
        if (p > top1) {
            top2 = top1;
            top1 = p;
        } else if (p > top2) {
            top2 = p;
        }
    }
    return top1 - top2;
}

int argmax_label(const std::vector<double>& probs) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[best]) {
            best = j;
        }
    }
    return static_cast<int>(best);
}

// Per-class probability rows for one model at the evaluation points, always
// expanded to num_classes columns; smoothed when a config is supplied.
Matrix eval_probs(const Model& model, const Matrix& x, const SmoothingConfig* smoothing,
                  long tag) {
    if (smoothing == nullptr) {
        return expand_binary_probs(model.predict_proba(x));
    }
    SmoothingConfig cfg = *smoothing;
    if (cfg.pairing == NoisePairing::independent) {
        std::uint64_t mix[2] = {cfg.noise_seed, static_cast<std::uint64_t>(tag)};
        cfg.noise_seed = fnv1a(mix, sizeof(mix));
    }
    return smooth_predict(model, cfg, x);
}

std::vector<double> probs_row(const Matrix& probs, std::size_t i) {
    return std::vector<double>(probs.row_ptr(i), probs.row_ptr(i) + probs.cols());
}

std::vector<ConfidencePoint> confidence_curve(const std::vector<PredictionRecord>& records,
                                              const std::vector<LufEstimate>& estimates,
                                              int num_classes) {
    std::vector<double> grid;
    int ticks = (num_classes == 2) ? 5 : 10;
    for (int t = 0; t < ticks; ++t) {
        grid.push_back(static_cast<double>(t) / 10.0);
    }
    std::vector<ConfidencePoint> curve;
    for (double c : grid) {
        ConfidencePoint pt;
        pt.threshold = c;
        double total = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].confidence >= c) {
                total += estimates[i].luf_value;
                ++pt.count;
            }
        }
        pt.value = (pt.count > 0) ? total / static_cast<double>(pt.count) : 0.0;
        curve.push_back(pt);
    }
    return curve;
}

void fill_histogram(LufReport& report) {
    double max_fraction = 0.0;
    for (const FlipFraction& f : report.flip_fractions) {
        max_fraction = std::max(max_fraction, f.fraction);
    }
    double span = (max_fraction > 0.0) ? max_fraction : 1.0;
    report.histogram_edges.resize(11);
    for (int b = 0; b <= 10; ++b) {
        report.histogram_edges[static_cast<std::size_t>(b)] =
            span * static_cast<double>(b) / 10.0;
    }
    report.histogram_counts.assign(10, 0);
    for (const FlipFraction& f : report.flip_fractions) {
        int bin = static_cast<int>(std::floor(f.fraction / (span / 10.0)));
        bin = std::min(bin, 9);
        ++report.histogram_counts[static_cast<std::size_t>(bin)];
    }
}

// Common reduction: baseline per-class probabilities plus one probability
// matrix per variant, reduced to records, estimates, curve and histogram in
// fixed variant order.
LufReport reduce_report(const std::vector<long>& eval_ids, const Matrix& base_probs,
                        const std::vector<Matrix>& variant_probs,
                        const std::vector<long>& tags, int num_classes) {
    LufReport report;
    report.num_classes = num_classes;
    std::size_t n_eval = eval_ids.size();
    std::size_t n_var = variant_probs.size();

    std::vector<int> base_labels(n_eval);
    report.baseline.resize(n_eval);
    report.estimates.resize(n_eval);
    for (std::size_t i = 0; i < n_eval; ++i) {
        PredictionRecord& rec = report.baseline[i];
        rec.point_id = eval_ids[i];
        rec.probs = probs_row(base_probs, i);
        rec.label = argmax_label(rec.probs);
        rec.confidence = confidence_of(rec.probs);
        base_labels[i] = rec.label;
        report.estimates[i].point_id = eval_ids[i];
        report.estimates[i].num_leave_out_models = static_cast<int>(n_var);
    }

    report.flip_fractions.resize(n_var);
    for (std::size_t v = 0; v < n_var; ++v) {
        const Matrix& probs = variant_probs[v];
        double mass = 0.0;
        for (std::size_t i = 0; i < n_eval; ++i) {
            double diff = 0.0;
            for (std::size_t c = 0; c < probs.cols(); ++c) {
                diff = std::max(diff, std::abs(probs.at(i, c) - base_probs.at(i, c)));
            }
            mass += diff;
            LufEstimate& est = report.estimates[i];
            if (diff > est.luf_value) {
                est.luf_value = diff;
                est.responsible_removed_id = tags[v];
            }
        }
        report.flip_fractions[v].removed_id = tags[v];
        report.flip_fractions[v].fraction =
            (n_eval > 0) ? mass / static_cast<double>(n_eval) : 0.0;
    }

    double total = 0.0;
    for (const LufEstimate& est : report.estimates) {
        total += est.luf_value;
    }
    report.expected_luf = (n_eval > 0) ? total / static_cast<double>(n_eval) : 0.0;
    report.confidence_curve = confidence_curve(report.baseline, report.estimates, num_classes);
    fill_histogram(report);
    return report;
}

// Deterministic rules yield one-hot per-class indicators: probability 1 on
// the argmax. Definition-2 differences then reduce to argmax flips.
Matrix one_hot_probs(const Matrix& probs_raw) {
    Matrix expanded = expand_binary_probs(probs_raw);
    Matrix out(expanded.rows(), expanded.cols());
    for (std::size_t i = 0; i < expanded.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < expanded.cols(); ++j) {
            if (expanded.at(i, j) > expanded.at(i, best)) {
                best = j;
            }
        }
        out.at(i, best) = 1.0;
    }
    return out;
}

struct VariantOutputs {
    Matrix record_probs;  // soft probabilities for the report
    Matrix flip_probs;    // one-hot argmax indicators used for LUF
};

void check_deterministic(const LearningRule& rule, const char* what) {
    if (rule.kind == RuleKind::noisy_majority) {
        throw ConfigError(std::string(what) + " requires a deterministic rule; "
                          "noisy-majority needs the randomized audit");
    }
}

LufReport run_variant_audit(const LearningRule& base_rule,
                            const std::vector<LearningRule>& variant_rules,
                            const Dataset& dataset, const DatasetView& base_view,
                            const std::vector<DatasetView>& variant_views,
                            const std::vector<long>& tags,
                            const std::vector<long>& eval_ids,
                            const AuditOptions& options, const char* audit_kind) {
    Trainer trainer = resolve_trainer(options);
    Matrix x_eval = gather_by_ids(dataset, eval_ids);
    std::size_t n_var = variant_views.size();

    VariantOutputs base_out;
    std::vector<Matrix> flip_probs(n_var);

    auto run_one = [&](std::size_t task) {
        bool is_base = (task == 0);
        const LearningRule& rule = is_base ? base_rule : variant_rules[task - 1];
        const DatasetView& view = is_base ? base_view : variant_views[task - 1];
        long tag = is_base ? -1 : tags[task - 1];
        Model model;
        try {
            model = trainer(rule, view, tag);
        } catch (const Error& e) {
            throw AuditError(std::string(audit_kind) + " variant failed: " + e.what(), tag);
        }
        Matrix probs = eval_probs(model, x_eval, options.smoothing, tag);
        if (is_base) {
            base_out.record_probs = probs;
            base_out.flip_probs = one_hot_probs(probs);
        } else {
            flip_probs[task - 1] = one_hot_probs(probs);
        }
    };
    parallel_for(1 + n_var, options.parallelism, run_one);

    LufReport report = reduce_report(eval_ids, base_out.flip_probs, flip_probs, tags,
                                     dataset.num_classes);
    // Records carry the soft baseline probabilities, not the indicators.
    for (std::size_t i = 0; i < report.baseline.size(); ++i) {
        PredictionRecord& rec = report.baseline[i];
        rec.probs = probs_row(base_out.record_probs, i);
        rec.label = argmax_label(rec.probs);
        rec.confidence = confidence_of(rec.probs);
    }
    report.confidence_curve =
        confidence_curve(report.baseline, report.estimates, dataset.num_classes);
    report.rule_description = base_rule.canonical();
    report.rule_seed = base_rule.seed;
    return report;
}

}  // namespace

LufReport audit_deterministic(const LearningRule& rule, const Dataset& dataset,
                              const SplitPlan& plan, const std::vector<long>& eval_ids,
                              const AuditOptions& options) {
    check_deterministic(rule, "audit_deterministic");
    std::vector<long> eval = resolve_eval_ids(dataset, plan, eval_ids, options);
    DatasetView base_view = train_view(dataset, plan);
    std::vector<DatasetView> variant_views;
    std::vector<LearningRule> variant_rules;
    variant_views.reserve(plan.leave_out_ids.size());
    for (long removed : plan.leave_out_ids) {
        variant_views.push_back(leave_one_out(dataset, plan, removed));
        variant_rules.push_back(rule);
    }
    LufReport report = run_variant_audit(rule, variant_rules, dataset, base_view,
                                         variant_views, plan.leave_out_ids, eval, options,
                                         "leave-one-out");
    report.mode = "luf";
    report.split_seed = plan.seed;
    return report;
}

LufReport audit_randomized(const LearningRule& rule, const Dataset& dataset,
                           const SplitPlan& plan, const std::vector<long>& eval_ids,
                           int trials, const AuditOptions& options) {
    if (trials < 2) {
        throw ConfigError("randomized audit needs at least 2 trials");
    }
    double se_bound = 0.5 / std::sqrt(static_cast<double>(trials));
    if (rule.kind != RuleKind::noisy_majority) {
        // Deterministic rules: every trial retrains the identical model, so
        // the empirical frequencies are exactly the 0/1 indicators.
        LufReport report = audit_deterministic(rule, dataset, plan, eval_ids, options);
        report.mode = "luf-randomized";
        report.trials = trials;
        report.se_bound = se_bound;
        return report;
    }

    std::vector<long> eval = resolve_eval_ids(dataset, plan, eval_ids, options);
    Matrix x_eval = gather_by_ids(dataset, eval);
    DatasetView base_view = train_view(dataset, plan);
    std::vector<DatasetView> views;
    views.push_back(base_view);
    for (long removed : plan.leave_out_ids) {
        views.push_back(leave_one_out(dataset, plan, removed));
    }

    std::size_t n_eval = eval.size();
    std::size_t k = static_cast<std::size_t>(dataset.num_classes);
    std::vector<Matrix> freqs(views.size());

    auto run_variant = [&](std::size_t v) {
        Matrix counts(n_eval, k);
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::derive(rule.seed, Stream::trial_base,
                                  (static_cast<std::uint64_t>(v) << 32) |
                                      static_cast<std::uint64_t>(t));
            Model model;
            try {
                model = train_with_rng(rule, views[v], rng);
            } catch (const Error& e) {
                long tag = (v == 0) ? -1 : plan.leave_out_ids[v - 1];
                throw AuditError(std::string("randomized variant failed: ") + e.what(), tag);
            }
            std::vector<int> labels = model.predict_labels(x_eval);
            for (std::size_t i = 0; i < n_eval; ++i) {
                counts.at(i, static_cast<std::size_t>(labels[i])) += 1.0;
            }
        }
        for (std::size_t i = 0; i < n_eval; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                counts.at(i, c) /= static_cast<double>(trials);
            }
        }
        freqs[v] = std::move(counts);
    };
    parallel_for(views.size(), options.parallelism, run_variant);

    std::vector<Matrix> variant_freqs(freqs.begin() + 1, freqs.end());
    LufReport report = reduce_report(eval, freqs[0], variant_freqs, plan.leave_out_ids,
                                     dataset.num_classes);
    report.mode = "luf-randomized";
    report.rule_description = rule.canonical();
    report.rule_seed = rule.seed;
    report.split_seed = plan.seed;
    report.trials = trials;
    report.se_bound = se_bound;
    return report;
}

StabilityEstimate loo_stability(const LearningRule& rule, const Dataset& dataset,
                                const SplitPlan& plan, const AuditOptions& options) {
    if (plan.leave_out_ids.empty()) {
        throw ConfigError("loo_stability needs a nonempty leave-out set");
    }
    Trainer trainer = resolve_trainer(options);
    DatasetView base_view = train_view(dataset, plan);
    Model baseline = trainer(rule, base_view, -1);

    std::size_t n = plan.leave_out_ids.size();
    std::vector<double> diffs(n);
    auto run_one = [&](std::size_t j) {
        long removed = plan.leave_out_ids[j];
        std::size_t row = dataset.row_of(removed);
        Matrix x(1, dataset.features.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) {
            x.at(0, c) = dataset.features.at(row, c);
        }
        int y = dataset.labels[row];
        Model variant;
        try {
            variant = trainer(rule, leave_one_out(dataset, plan, removed), removed);
        } catch (const Error& e) {
            throw AuditError(std::string("stability variant failed: ") + e.what(), removed);
        }
        int base_loss = zero_one_loss(baseline.predict_proba(x), 0, y);
        int variant_loss = zero_one_loss(variant.predict_proba(x), 0, y);
        diffs[j] = std::abs(base_loss - variant_loss);
    };
    parallel_for(n, options.parallelism, run_one);

    StabilityEstimate est;
    double total = 0.0;
    for (double d : diffs) {
        total += d;
    }
    est.loo_stability_rate = total / static_cast<double>(n);
    if (rule.kind == RuleKind::noisy_majority) {
        est.dp_bound = dp_luf_bound(rule.dp_epsilon, 0.0);
    }
    return est;
}

double dp_luf_bound(double epsilon, double delta) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ArgumentError("epsilon must be positive and finite");
    }
    if (!(delta >= 0.0) || !(delta <= 1.0)) {
        throw ArgumentError("delta must lie in [0, 1]");
    }
    return std::expm1(epsilon) + delta;
}

std::vector<LufEstimate> luf_oracle_at(const LearningRule& rule, const DatasetView& view,
                                       const Matrix& probes) {
    if (rule.kind != RuleKind::knn && rule.kind != RuleKind::table_rule &&
        rule.kind != RuleKind::linear) {
        throw RefusalError("exact enumeration supports knn, table-rule and linear only");
    }
    if (view.size() > 64) {
        throw RefusalError("exact enumeration is capped at 64 training points");
    }
    Model baseline = train(rule, view);
    std::vector<int> base_labels = baseline.predict_labels(probes);

    std::vector<LufEstimate> estimates(probes.rows());
    for (std::size_t i = 0; i < probes.rows(); ++i) {
        estimates[i].point_id = static_cast<long>(i);
        estimates[i].num_leave_out_models = static_cast<int>(view.size());
    }
    for (std::size_t j = 0; j < view.size(); ++j) {
        DatasetView reduced;
        reduced.dataset = view.dataset;
        for (std::size_t r = 0; r < view.rows.size(); ++r) {
            if (r != j) {
                reduced.rows.push_back(view.rows[r]);
            }
        }
        Model variant = train(rule, reduced);
        std::vector<int> labels = variant.predict_labels(probes);
        long removed_id = view.point_id(j);
        for (std::size_t i = 0; i < probes.rows(); ++i) {
            if (labels[i] != base_labels[i] && estimates[i].luf_value == 0.0) {
                estimates[i].luf_value = 1.0;
                estimates[i].responsible_removed_id = removed_id;
            }
        }
    }
    return estimates;
}

std::vector<LufEstimate> luf_oracle(const LearningRule& rule, const Dataset& dataset) {
    DatasetView view = full_view(dataset);
    std::vector<LufEstimate> estimates = luf_oracle_at(rule, view, dataset.features);
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        estimates[i].point_id = dataset.point_ids[i];
    }
    return estimates;
}

Prop2Verdict prop2_check(const LearningRule& rule, const Dataset& dataset,
                         const SplitPlan& plan) {
    check_deterministic(rule, "prop2_check");
    DatasetView view = train_view(dataset, plan);
    Matrix x_train = view.gather_features();
    std::vector<int> y_train = view.gather_labels();

    std::vector<LufEstimate> oracle = luf_oracle_at(rule, view, x_train);
    Prop2Verdict verdict;
    for (const LufEstimate& est : oracle) {
        verdict.max_luf = std::max(verdict.max_luf, est.luf_value);
    }

    Model baseline = train(rule, view);
    Matrix base_probs = baseline.predict_proba(x_train);
    double total = 0.0;
    for (std::size_t j = 0; j < view.size(); ++j) {
        DatasetView reduced;
        reduced.dataset = view.dataset;
        for (std::size_t r = 0; r < view.rows.size(); ++r) {
            if (r != j) {
                reduced.rows.push_back(view.rows[r]);
            }
        }
        Model variant = train(rule, reduced);
        Matrix xj(1, x_train.cols());
        for (std::size_t c = 0; c < x_train.cols(); ++c) {
            xj.at(0, c) = x_train.at(j, c);
        }
        int base_loss = zero_one_loss(base_probs, j, y_train[j]);
        int variant_loss = zero_one_loss(variant.predict_proba(xj), 0, y_train[j]);
        total += std::abs(base_loss - variant_loss);
    }
    verdict.stability_rate = total / static_cast<double>(view.size());
    verdict.holds = verdict.stability_rate <= verdict.max_luf;
    return verdict;
}

LufReport seed_instability(const LearningRule& rule, const Dataset& dataset,
                           const SplitPlan& plan, const std::vector<std::uint64_t>& seeds,
                           const std::vector<long>& eval_ids, const AuditOptions& options) {
    check_deterministic(rule, "seed_instability");
    if (seeds.size() < 2) {
        throw ConfigError("seed instability needs at least 2 seeds");
    }
    std::vector<long> eval = resolve_eval_ids(dataset, plan, eval_ids, options);
    DatasetView view = train_view(dataset, plan);

    LearningRule base_rule = rule;
    base_rule.seed = seeds[0];
    std::vector<LearningRule> variant_rules;
    std::vector<DatasetView> variant_views;
    std::vector<long> tags;
    for (std::size_t s = 1; s < seeds.size(); ++s) {
        LearningRule r = rule;
        r.seed = seeds[s];
        variant_rules.push_back(r);
        variant_views.push_back(view);
        tags.push_back(static_cast<long>(seeds[s]));
    }
    LufReport report = run_variant_audit(base_rule, variant_rules, dataset, view,
                                         variant_views, tags, eval, options, "seed");
    report.mode = "seed-instability";
    report.split_seed = plan.seed;
    return report;
}

LufReport architecture_instability(const std::vector<LearningRule>& rules,
                                   const Dataset& dataset, const SplitPlan& plan,
                                   const std::vector<long>& eval_ids,
                                   const AuditOptions& options) {
    if (rules.size() < 2) {
        throw ConfigError("architecture instability needs at least 2 rules");
    }
    for (const LearningRule& r : rules) {
        check_deterministic(r, "architecture_instability");
        bool binary_only = (r.kind == RuleKind::table_rule || r.kind == RuleKind::noisy_majority);
        if (binary_only && dataset.num_classes != 2) {
            throw ConfigError("rules do not share an output space: " + rule_kind_name(r.kind) +
                              " is binary only");
        }
    }
    std::vector<long> eval = resolve_eval_ids(dataset, plan, eval_ids, options);
    DatasetView view = train_view(dataset, plan);

    LearningRule base_rule = rules[0];
    std::vector<LearningRule> variant_rules;
    std::vector<DatasetView> variant_views;
    std::vector<long> tags;
    for (std::size_t r = 1; r < rules.size(); ++r) {
        LearningRule vr = rules[r];
        vr.seed = rules[0].seed;  // shared seed across architectures
        variant_rules.push_back(vr);
        variant_views.push_back(view);
        tags.push_back(static_cast<long>(r));
    }
    LufReport report = run_variant_audit(base_rule, variant_rules, dataset, view,
                                         variant_views, tags, eval, options, "architecture");
    report.mode = "arch-instability";
    report.split_seed = plan.seed;
    return report;
}

}  // namespace looaudit
