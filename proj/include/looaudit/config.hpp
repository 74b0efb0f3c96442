#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "looaudit/dataset.hpp"
#include "looaudit/preprocess.hpp"
#include "looaudit/rules.hpp"
#include "looaudit/smoothing.hpp"

namespace looaudit {

enum class AuditMode {
    luf,
    luf_randomized,
    stability,
    seed_instability,
    arch_instability,
    scenario,
    boundary,
    smooth_audit,
};

std::string audit_mode_name(AuditMode mode);

struct ScenarioConfig {
    std::string name;  // prop1 | two-circles | dp-bound | figure1
    double d = 1.0;
    std::size_t n = 20;
    int grid_resolution = 25;
    double epsilon = 0.5;
    int trials = 10000;
    std::uint64_t seed = 0;
    std::vector<int> layer_dims = {2, 64, 64, 64, 1};
};

struct AuditConfig {
    AuditMode mode = AuditMode::luf;
    int parallelism = 1;
    std::string out_dir = "out";
    std::string cache_dir;
    bool use_cache = false;

    bool synthetic = true;
    SyntheticSpec synth;
    std::string csv_path;
    std::string label_column = "label";
    PreprocessSpec preprocess;

    double train_fraction = 0.8;
    std::size_t o_size = 0;  // 0 selects min(100, train size) at run time
    std::uint64_t split_seed = 0;
    LeaveOutSource o_source = LeaveOutSource::train;

    std::vector<LearningRule> rules;  // [rule], then [rule.2], [rule.3], ...

    int trials = 1000;
    bool eval_test_only = false;
    std::vector<std::uint64_t> seeds;  // seed-instability
    int boundary_grid = 200;           // raster resolution for boundary mode
    bool smoothing_enabled = false;
    SmoothingConfig smoothing;

    ScenarioConfig scenario;

    // Canonical text form; hashing it identifies a run.
    std::string canonical() const;
    std::uint64_t hash() const;
};

// Parses and fully validates a config file. Unknown keys, duplicate keys and
// syntax errors are reported with line numbers; semantic errors name the
// offending key.
AuditConfig parse_config(const std::string& path);
AuditConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace looaudit
