#include "looaudit/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "looaudit/dataset.hpp"
#include "looaudit/errors.hpp"
#include "looaudit/metrics.hpp"
#include "looaudit/raster.hpp"
#include "looaudit/report_io.hpp"
#include "looaudit/rules.hpp"

namespace looaudit {
namespace {

Dataset table_rule_dataset() {
    Dataset ds;
    ds.features = Matrix(3, 2);
    for (int p = 0; p < 3; ++p) {
        ds.features.at(static_cast<std::size_t>(p), 0) = table::kPoints[p][0];
        ds.features.at(static_cast<std::size_t>(p), 1) = table::kPoints[p][1];
        ds.labels.push_back(table::kLabels[p]);
        ds.point_ids.push_back(p);
    }
    ds.num_classes = 2;
    ds.feature_names = {"x0", "x1"};
    return ds;
}

SplitPlan all_in_train(const Dataset& ds, const std::vector<long>& leave_out) {
    SplitPlan plan;
    plan.train_ids = ds.point_ids;
    plan.leave_out_ids = leave_out;
    std::sort(plan.leave_out_ids.begin(), plan.leave_out_ids.end());
    return plan;
}

// Grid of cell centers strictly inside the disc around (cx, 0).
Matrix disc_grid(double cx, double r, int resolution) {
    std::vector<double> pts;
    for (int gi = 0; gi < resolution; ++gi) {
        for (int gj = 0; gj < resolution; ++gj) {
            double u = -r + 2.0 * r * (static_cast<double>(gj) + 0.5) /
                                static_cast<double>(resolution);
            double v = -r + 2.0 * r * (static_cast<double>(gi) + 0.5) /
                                static_cast<double>(resolution);
            if (u * u + v * v < r * r) {
                pts.push_back(cx + u);
                pts.push_back(v);
            }
        }
    }
    std::size_t count = pts.size() / 2;
    return Matrix(count, 2, std::move(pts));
}

int knn_label_at(const Model& model, double px, double py) {
    Matrix probe(1, 2);
    probe.at(0, 0) = px;
    probe.at(0, 1) = py;
    return model.predict_labels(probe)[0];
}

}  // namespace

bool ScenarioResult::all_pass() const {
    for (const Claim& c : claims) {
        if (!c.pass) {
            return false;
        }
    }
    return !claims.empty();
}

void ScenarioResult::add_exact(const std::string& description, double expected,
                               double observed) {
    Claim c;
    c.description = description;
    c.expected = expected;
    c.observed = observed;
    c.tolerance = 0.0;
    c.pass = (expected == observed);
    claims.push_back(std::move(c));
}

void ScenarioResult::add_violation(const std::string& description, double violation) {
    Claim c;
    c.description = description;
    c.expected = 0.0;
    c.observed = violation;
    c.tolerance = 0.0;
    c.pass = (violation == 0.0);
    claims.push_back(std::move(c));
}

nlohmann::ordered_json scenario_to_json(const ScenarioResult& result) {
    nlohmann::ordered_json j;
    j["schema"] = "looaudit-scenario-v1";
    j["name"] = result.name;
    j["all_pass"] = result.all_pass();
    nlohmann::ordered_json claims = nlohmann::ordered_json::array();
    for (const Claim& c : result.claims) {
        claims.push_back({{"description", c.description},
                          {"expected", c.expected},
                          {"observed", c.observed},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    }
    j["claims"] = std::move(claims);
    nlohmann::ordered_json meta;
    for (const auto& [key, value] : result.metadata) {
        meta[key] = value;
    }
    j["metadata"] = std::move(meta);
    return j;
}

ScenarioResult run_prop1_scenario() {
    ScenarioResult result;
    result.name = "prop1";

    Dataset ds = table_rule_dataset();
    SplitPlan plan = all_in_train(ds, ds.point_ids);
    LearningRule rule;
    rule.kind = RuleKind::table_rule;

    StabilityEstimate stability = loo_stability(rule, ds, plan);
    result.add_exact("leave-one-out stability rate over the three points", 0.0,
                     stability.loo_stability_rate);

    std::vector<LufEstimate> oracle = luf_oracle(rule, ds);
    double total = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        result.add_exact("exact unfairness at point x" + std::to_string(i + 1), 1.0,
                         oracle[i].luf_value);
        total += oracle[i].luf_value;
    }
    result.add_exact("expected unfairness over the support", 1.0,
                     total / static_cast<double>(oracle.size()));
    return result;
}

ScenarioResult run_two_circles_scenario(double d, std::size_t n, int grid_resolution,
                                        std::uint64_t seed) {
    if (!(d > 0.0) || n < 4 || grid_resolution < 2) {
        throw ConfigError("two-circles scenario needs d > 0, n >= 4 and a real grid");
    }
    SyntheticSpec spec;
    spec.kind = SyntheticKind::two_circles;
    spec.n = n;
    spec.diameter = d;
    spec.seed = seed;
    Dataset ds = sample_synthetic(spec);
    std::vector<std::size_t> counts = class_counts(ds);
    if (counts[0] < 2 || counts[1] < 2) {
        throw ConfigError("degenerate two-circles sample (fewer than 2 points per class); "
                          "rerun with a different seed");
    }

    ScenarioResult result;
    result.name = "two-circles";
    result.metadata["d"] = format_double(d);
    result.metadata["n"] = std::to_string(n);
    result.metadata["grid_resolution"] = std::to_string(grid_resolution);
    result.metadata["seed"] = std::to_string(seed);

    LearningRule rule;
    rule.kind = RuleKind::knn;
    rule.k = 1;

    double r = d / 2.0;
    Matrix grid0 = disc_grid(0.0, r, grid_resolution);
    Matrix grid1 = disc_grid(3.0 * d, r, grid_resolution);
    Matrix probes(grid0.rows() + grid1.rows(), 2);
    for (std::size_t i = 0; i < grid0.rows(); ++i) {
        probes.at(i, 0) = grid0.at(i, 0);
        probes.at(i, 1) = grid0.at(i, 1);
    }
    for (std::size_t i = 0; i < grid1.rows(); ++i) {
        probes.at(grid0.rows() + i, 0) = grid1.at(i, 0);
        probes.at(grid0.rows() + i, 1) = grid1.at(i, 1);
    }

    DatasetView view = full_view(ds);
    std::vector<LufEstimate> oracle = luf_oracle_at(rule, view, probes);
    double max_luf = 0.0;
    for (const LufEstimate& est : oracle) {
        max_luf = std::max(max_luf, est.luf_value);
    }
    result.add_exact("max exact unfairness over in-disc grid probes (" +
                         std::to_string(probes.rows()) + " probes)",
                     0.0, max_luf);

    // Locate the 1-NN label crossing on the segment between the centers,
    // then look for a removal that flips a probe near the crossing.
    Model baseline = train(rule, view);
    double lo = 0.0;
    double hi = 3.0 * d;
    int label_lo = knn_label_at(baseline, lo, 0.0);
    int label_hi = knn_label_at(baseline, hi, 0.0);
    bool found = false;
    double probe_x = 0.0;
    long removed_id = -1;
    int base_label = -1;
    int variant_label = -1;
    if (label_lo != label_hi) {
        for (int step = 0; step < 80; ++step) {
            double mid = 0.5 * (lo + hi);
            if (knn_label_at(baseline, mid, 0.0) == label_lo) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        double candidates[2] = {lo, hi};
        for (double cand : candidates) {
            for (std::size_t j = 0; j < view.size() && !found; ++j) {
                DatasetView reduced;
                reduced.dataset = view.dataset;
                for (std::size_t t = 0; t < view.rows.size(); ++t) {
                    if (t != j) {
                        reduced.rows.push_back(view.rows[t]);
                    }
                }
                Model variant = train(rule, reduced);
                int before = knn_label_at(baseline, cand, 0.0);
                int after = knn_label_at(variant, cand, 0.0);
                if (before != after) {
                    found = true;
                    probe_x = cand;
                    removed_id = view.point_id(j);
                    base_label = before;
                    variant_label = after;
                }
            }
            if (found) {
                break;
            }
        }
    }
    result.add_exact("a probe outside the support flips under some removal", 1.0,
                     found ? 1.0 : 0.0);

    if (found) {
        // Adjacent training sets assign the probe different labels with
        // probability 1 each, so Pr[h_S(x)=k] = 1 > e^eps * 0 + delta for
        // every finite eps and delta < 1.
        result.metadata["dp_witness_probe_x"] = format_double(probe_x);
        result.metadata["dp_witness_probe_y"] = format_double(0.0);
        result.metadata["dp_witness_removed_id"] = std::to_string(removed_id);
        result.metadata["dp_witness_label_with_point"] = std::to_string(base_label);
        result.metadata["dp_witness_label_without_point"] = std::to_string(variant_label);
    }
    result.add_exact("privacy-violation witness emitted (two adjacent sets, one probe, "
                     "output probabilities 1 vs 0)",
                     1.0, found ? 1.0 : 0.0);
    return result;
}

ScenarioResult run_dp_bound_scenario(double epsilon, int trials, std::uint64_t seed) {
    if (trials < 1000) {
        throw ConfigError("bound scenario needs at least 1000 trials");
    }
    // Balanced labels: the signed count is 0, so any single removal shifts
    // the acceptance probability by the largest possible amount.
    constexpr std::size_t kPoints = 8;
    Dataset ds;
    ds.features = Matrix(kPoints, 2);
    ds.num_classes = 2;
    for (std::size_t i = 0; i < kPoints; ++i) {
        ds.features.at(i, 0) = static_cast<double>(i);
        ds.labels.push_back(static_cast<int>(i % 2));
        ds.point_ids.push_back(static_cast<long>(i));
    }
    ds.feature_names = {"x0", "x1"};
    SplitPlan plan = all_in_train(ds, ds.point_ids);

    LearningRule rule;
    rule.kind = RuleKind::noisy_majority;
    rule.dp_epsilon = epsilon;
    rule.seed = seed;

    LufReport report = audit_randomized(rule, ds, plan, ds.point_ids, trials);
    double bound = dp_luf_bound(epsilon, 0.0) + 3.0 * report.se_bound;
    double max_luf = 0.0;
    for (const LufEstimate& est : report.estimates) {
        max_luf = std::max(max_luf, est.luf_value);
    }

    ScenarioResult result;
    result.name = "dp-bound";
    result.metadata["epsilon"] = format_double(epsilon);
    result.metadata["trials"] = std::to_string(trials);
    result.metadata["bound_with_slack"] = format_double(bound);
    result.metadata["max_monte_carlo_luf"] = format_double(max_luf);
    result.metadata["standard_error_bound"] = format_double(report.se_bound);
    result.add_violation("max Monte Carlo unfairness above e^eps - 1 + 3 standard errors, "
                         "clamped at 0",
                         std::max(0.0, max_luf - bound));
    return result;
}

Figure1Result run_figure1_scenario(std::size_t n, const std::vector<int>& layer_dims,
                                   int grid_resolution, std::uint64_t seed) {
    if (layer_dims.size() < 2 || layer_dims.front() != 2 || layer_dims.back() != 1) {
        throw ConfigError("layer dims must run from 2 input features to 1 output");
    }
    if (grid_resolution < 2) {
        throw ConfigError("grid resolution must be at least 2");
    }
    SyntheticSpec spec;
    spec.kind = SyntheticKind::uniform_bernoulli_square;
    spec.n = n;
    spec.label_probability = 0.5;
    spec.seed = seed;
    Dataset ds = sample_synthetic(spec);

    long removed = static_cast<long>(Rng::derive(seed, Stream::split).next_below(n));
    SplitPlan plan = all_in_train(ds, {removed});

    LearningRule rule;
    rule.kind = RuleKind::standard_mlp;
    rule.hidden_dims.assign(layer_dims.begin() + 1, layer_dims.end() - 1);
    rule.epochs = 500;
    rule.batch_size = 32;
    rule.optimizer = OptimizerKind::adam;
    rule.learning_rate = 1e-3;
    rule.seed = seed;

    Model baseline = train(rule, train_view(ds, plan));
    Model variant = train(rule, leave_one_out(ds, plan, removed));

    std::size_t res = static_cast<std::size_t>(grid_resolution);
    Matrix probes(res * res, 2);
    for (std::size_t i = 0; i < res; ++i) {
        for (std::size_t j = 0; j < res; ++j) {
            // Row 0 renders at the top, so it carries the largest x1.
            probes.at(i * res + j, 0) =
                (static_cast<double>(j) + 0.5) / static_cast<double>(res);
            probes.at(i * res + j, 1) =
                1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(res);
        }
    }
    Matrix base_probs = baseline.predict_proba(probes);
    Matrix var_probs = variant.predict_proba(probes);

    Matrix base_grid(res, res);
    Matrix var_grid(res, res);
    Matrix diff_grid(res, res);
    std::size_t flips = 0;
    double far_flip_distance = 0.0;
    std::size_t removed_row = ds.row_of(removed);
    double rx = ds.features.at(removed_row, 0);
    double ry = ds.features.at(removed_row, 1);
    for (std::size_t i = 0; i < res; ++i) {
        for (std::size_t j = 0; j < res; ++j) {
            std::size_t q = i * res + j;
            double pb = base_probs.at(q, 0);
            double pv = var_probs.at(q, 0);
            base_grid.at(i, j) = pb;
            var_grid.at(i, j) = pv;
            diff_grid.at(i, j) = pv - pb;
            bool flip = (pb > 0.5) != (pv > 0.5);
            if (flip) {
                ++flips;
                double dx = probes.at(q, 0) - rx;
                double dy = probes.at(q, 1) - ry;
                far_flip_distance = std::max(far_flip_distance, std::sqrt(dx * dx + dy * dy));
            }
        }
    }

    Figure1Result out;
    out.result.name = "figure1";
    out.result.metadata["n"] = std::to_string(n);
    out.result.metadata["seed"] = std::to_string(seed);
    out.result.metadata["removed_id"] = std::to_string(removed);
    out.result.metadata["optimizer"] = "adam";
    out.result.metadata["learning_rate"] = format_double(rule.learning_rate);
    out.result.metadata["epochs"] = std::to_string(rule.epochs);
    out.result.metadata["grid_resolution"] = std::to_string(grid_resolution);
    out.result.metadata["flipped_fraction"] =
        format_double(static_cast<double>(flips) / static_cast<double>(res * res));
    out.result.metadata["max_flip_distance_from_removed"] = format_double(far_flip_distance);

    out.result.add_exact("some grid cells flip when one training point is removed", 1.0,
                         flips > 0 ? 1.0 : 0.0);
    out.result.add_exact("a flipped cell lies farther than 0.25 from the removed point", 1.0,
                         far_flip_distance > 0.25 ? 1.0 : 0.0);

    out.baseline_ppm = raster_ppm_probability(base_grid);
    out.variant_ppm = raster_ppm_probability(var_grid);
    out.difference_ppm = raster_ppm_difference(diff_grid);
    return out;
}

}  // namespace looaudit
