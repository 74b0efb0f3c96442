#include "looaudit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>

#include "looaudit/cache.hpp"
#include "looaudit/errors.hpp"
#include "looaudit/hash.hpp"
#include "looaudit/metrics.hpp"
#include "looaudit/model_io.hpp"
#include "looaudit/plots.hpp"
#include "looaudit/preprocess.hpp"
#include "looaudit/raster.hpp"
#include "looaudit/report_io.hpp"
#include "looaudit/scenarios.hpp"
#include "looaudit/version.hpp"

namespace fs = std::filesystem;

namespace looaudit {

namespace {

// Collects variant records from worker threads; tags are unique per run, so
// sorting by tag gives a schedule-independent manifest.
class Bookkeeper {
   public:
    void add(VariantRecord record) {
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back(std::move(record));
    }

    std::vector<VariantRecord> sorted() {
        std::lock_guard<std::mutex> lock(mutex_);
        std::vector<VariantRecord> out = records_;
        std::sort(out.begin(), out.end(),
                  [](const VariantRecord& a, const VariantRecord& b) { return a.tag < b.tag; });
        return out;
    }

   private:
    std::mutex mutex_;
    std::vector<VariantRecord> records_;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    auto delta = std::chrono::steady_clock::now() - start;
    return std::chrono::duration<double, std::milli>(delta).count();
}

Trainer make_trainer(std::optional<ModelCache>& cache, Bookkeeper& book) {
    return [&cache, &book](const LearningRule& rule, const DatasetView& view, long tag) -> Model {
        auto start = std::chrono::steady_clock::now();
        VariantRecord record;
        record.tag = tag;
        try {
            Model model;
            bool hit = false;
            if (cache) {
                if (std::optional<Model> cached = cache->load(rule, view)) {
                    model = std::move(*cached);
                    hit = true;
                }
            }
            if (!hit) {
                model = train(rule, view);
                if (cache) cache->store(rule, view, model);
            }
            record.cache_hit = hit;
            record.digest = hex64(model_digest(model));
            record.wall_ms = elapsed_ms(start);
            book.add(record);
            return model;
        } catch (const Error& e) {
            record.status = e.what();
            record.wall_ms = elapsed_ms(start);
            book.add(record);
            throw;
        }
    };
}

Dataset build_dataset(const AuditConfig& cfg) {
    if (cfg.synthetic) return sample_synthetic(cfg.synth);
    LoadResult loaded = load_csv(cfg.csv_path, cfg.preprocess, cfg.label_column);
    for (const std::string& warning : loaded.warnings)
        std::cerr << "warning: " << warning << "\n";
    return std::move(loaded.dataset);
}

SplitPlan build_plan(const AuditConfig& cfg, const Dataset& dataset) {
    std::size_t n = dataset.size();
    std::size_t n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.train_fraction));
    std::size_t cap = cfg.o_source == LeaveOutSource::train ? n_train : n - n_train;
    std::size_t o_size = cfg.o_size == 0 ? std::min<std::size_t>(100, cap) : cfg.o_size;
    return make_split(dataset, cfg.train_fraction, o_size, cfg.split_seed, cfg.o_source);
}

void write_manifest(const RunManifest& manifest, const std::string& out_dir) {
    write_text_file((fs::path(out_dir) / "manifest.json").string(),
                    manifest_to_json(manifest).dump(2) + "\n");
}

void write_stability_report(const StabilityEstimate& estimate, const LufReport& skeleton,
                            const std::string& out_dir) {
    nlohmann::ordered_json doc;
    doc["schema"] = "looaudit-stability-v1";
    doc["mode"] = "stability";
    doc["rule"] = skeleton.rule_description;
    doc["rule_seed"] = skeleton.rule_seed;
    doc["split_seed"] = skeleton.split_seed;
    doc["loo_stability_rate"] = estimate.loo_stability_rate;
    if (estimate.dp_bound) {
        doc["dp_bound"] = *estimate.dp_bound;
    } else {
        doc["dp_bound"] = nullptr;
    }
    write_text_file((fs::path(out_dir) / "report.json").string(), doc.dump(2) + "\n");
}

// Class-1 probability over a raster grid spanning the (padded) bounding box
// of the data; pixel rows top-to-bottom.
Matrix probability_grid(const Model& model, const Dataset& dataset, int resolution) {
    double lo0 = dataset.features.at(0, 0), hi0 = lo0;
    double lo1 = dataset.features.at(0, 1), hi1 = lo1;
    for (std::size_t i = 0; i < dataset.features.rows(); ++i) {
        lo0 = std::min(lo0, dataset.features.at(i, 0));
        hi0 = std::max(hi0, dataset.features.at(i, 0));
        lo1 = std::min(lo1, dataset.features.at(i, 1));
        hi1 = std::max(hi1, dataset.features.at(i, 1));
    }
    auto pad = [](double& lo, double& hi) {
        double span = hi - lo;
        double margin = span > 0.0 ? 0.05 * span : 0.5;
        lo -= margin;
        hi += margin;
    };
    pad(lo0, hi0);
    pad(lo1, hi1);

    std::size_t res = static_cast<std::size_t>(resolution);
    Matrix probes(res * res, 2);
    for (std::size_t i = 0; i < res; ++i) {
        double x1 = hi1 - (static_cast<double>(i) + 0.5) / static_cast<double>(res) * (hi1 - lo1);
        for (std::size_t j = 0; j < res; ++j) {
            double x0 =
                lo0 + (static_cast<double>(j) + 0.5) / static_cast<double>(res) * (hi0 - lo0);
            probes.at(i * res + j, 0) = x0;
            probes.at(i * res + j, 1) = x1;
        }
    }
    Matrix probs = model.predict_proba(probes);
    Matrix grid(res, res);
    for (std::size_t i = 0; i < res; ++i)
        for (std::size_t j = 0; j < res; ++j) grid.at(i, j) = probs.at(i * res + j, 0);
    return grid;
}

void run_boundary_mode(const AuditConfig& cfg, const Dataset& dataset, const SplitPlan& plan,
                       const Trainer& trainer) {
    if (dataset.features.cols() != 2)
        throw ConfigError("boundary rasters need 2-feature data, got " +
                          std::to_string(dataset.features.cols()) + " features");
    if (dataset.num_classes != 2)
        throw ConfigError("boundary rasters need a binary label space");

    const LearningRule& rule = cfg.rules.front();
    Model baseline = trainer(rule, train_view(dataset, plan), -1);
    Matrix base_grid = probability_grid(baseline, dataset, cfg.boundary_grid);
    fs::path out(cfg.out_dir);
    write_binary_file((out / "boundary_baseline.ppm").string(),
                      raster_ppm_probability(base_grid));

    if (plan.leave_out_ids.empty()) return;
    long removed = plan.leave_out_ids.front();
    Model variant = trainer(rule, leave_one_out(dataset, plan, removed), removed);
    Matrix var_grid = probability_grid(variant, dataset, cfg.boundary_grid);
    Matrix diff(var_grid.rows(), var_grid.cols());
    for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] = var_grid.data()[i] - base_grid.data()[i];
    write_binary_file((out / "boundary_variant.ppm").string(), raster_ppm_probability(var_grid));
    write_binary_file((out / "boundary_difference.ppm").string(), raster_ppm_difference(diff));
}

RunOutcome run_scenario_mode(const AuditConfig& cfg, RunManifest manifest) {
    const ScenarioConfig& sc = cfg.scenario;
    fs::path out(cfg.out_dir);
    ScenarioResult result;
    if (sc.name == "prop1") {
        result = run_prop1_scenario();
    } else if (sc.name == "two-circles") {
        result = run_two_circles_scenario(sc.d, sc.n, sc.grid_resolution, sc.seed);
    } else if (sc.name == "dp-bound") {
        result = run_dp_bound_scenario(sc.epsilon, sc.trials, sc.seed);
    } else if (sc.name == "figure1") {
        Figure1Result fig = run_figure1_scenario(sc.n, sc.layer_dims, sc.grid_resolution, sc.seed);
        write_binary_file((out / "boundary_baseline.ppm").string(), fig.baseline_ppm);
        write_binary_file((out / "boundary_variant.ppm").string(), fig.variant_ppm);
        write_binary_file((out / "boundary_difference.ppm").string(), fig.difference_ppm);
        result = std::move(fig.result);
    } else {
        throw ConfigError("unknown scenario \"" + sc.name + "\"");
    }

    write_text_file((out / "scenario.json").string(), scenario_to_json(result).dump(2) + "\n");
    manifest.success = result.all_pass();
    write_manifest(manifest, cfg.out_dir);
    return RunOutcome{std::move(manifest), result.all_pass()};
}

}  // namespace

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest) {
    nlohmann::ordered_json doc;
    doc["schema"] = "looaudit-manifest-v1";
    doc["config_hash"] = manifest.config_hash;
    doc["version"] = manifest.version;
    doc["mode"] = manifest.mode;
    doc["success"] = manifest.success;
    nlohmann::ordered_json variants = nlohmann::ordered_json::array();
    for (const VariantRecord& record : manifest.variants) {
        nlohmann::ordered_json row;
        row["tag"] = record.tag;
        row["digest"] = record.digest;
        row["cache_hit"] = record.cache_hit;
        row["wall_ms"] = record.wall_ms;
        row["status"] = record.status;
        variants.push_back(std::move(row));
    }
    doc["variants"] = std::move(variants);
    return doc;
}

RunOutcome run_audit(const AuditConfig& config) {
    fs::create_directories(config.out_dir);

    RunManifest manifest;
    manifest.config_hash = hex64(config.hash());
    manifest.version = kVersion;
    manifest.mode = audit_mode_name(config.mode);

    if (config.mode == AuditMode::scenario) return run_scenario_mode(config, std::move(manifest));

    Dataset dataset = build_dataset(config);
    validate_dataset(dataset);
    SplitPlan plan = build_plan(config, dataset);

    std::optional<ModelCache> cache;
    if (config.use_cache) cache.emplace(config.cache_dir);
    Bookkeeper book;
    AuditOptions options;
    options.trainer = make_trainer(cache, book);
    options.parallelism = config.parallelism;
    options.eval_test_only = config.eval_test_only;
    if (config.smoothing_enabled) options.smoothing = &config.smoothing;

    auto finish = [&](bool success) {
        manifest.variants = book.sorted();
        manifest.success = success;
        write_manifest(manifest, config.out_dir);
    };

    try {
        switch (config.mode) {
            case AuditMode::luf:
            case AuditMode::smooth_audit: {
                LufReport report =
                    audit_deterministic(config.rules.front(), dataset, plan, {}, options);
                report.mode = audit_mode_name(config.mode);
                write_report_files(report, config.out_dir);
                emit_plots(report, config.out_dir);
                break;
            }
            case AuditMode::luf_randomized: {
                LufReport report = audit_randomized(config.rules.front(), dataset, plan, {},
                                                    config.trials, options);
                write_report_files(report, config.out_dir);
                emit_plots(report, config.out_dir);
                if (config.rules.front().kind == RuleKind::noisy_majority) {
                    // Monte Carlo trials are aggregated per variant, not kept.
                    book.add(VariantRecord{-1, "", false, 0.0, "ok"});
                    for (long removed : plan.leave_out_ids)
                        book.add(VariantRecord{removed, "", false, 0.0, "ok"});
                }
                break;
            }
            case AuditMode::stability: {
                StabilityEstimate estimate =
                    loo_stability(config.rules.front(), dataset, plan, options);
                LufReport skeleton;
                skeleton.rule_description = config.rules.front().canonical();
                skeleton.rule_seed = config.rules.front().seed;
                skeleton.split_seed = plan.seed;
                write_stability_report(estimate, skeleton, config.out_dir);
                break;
            }
            case AuditMode::seed_instability: {
                LufReport report = seed_instability(config.rules.front(), dataset, plan,
                                                    config.seeds, {}, options);
                write_report_files(report, config.out_dir);
                emit_plots(report, config.out_dir);
                break;
            }
            case AuditMode::arch_instability: {
                LufReport report =
                    architecture_instability(config.rules, dataset, plan, {}, options);
                write_report_files(report, config.out_dir);
                emit_plots(report, config.out_dir);
                break;
            }
            case AuditMode::boundary: {
                run_boundary_mode(config, dataset, plan, options.trainer);
                break;
            }
            case AuditMode::scenario:
                break;  // handled above
        }
    } catch (const Error&) {
        finish(false);
        throw;
    }

    finish(true);
    return RunOutcome{std::move(manifest), true};
}

}  // namespace looaudit
