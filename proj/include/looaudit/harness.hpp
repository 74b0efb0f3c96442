#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "looaudit/config.hpp"

namespace looaudit {

// One row per trained variant. tag -1 is the baseline; otherwise the removed
// id, the seed or the rule index, matching the report. digest is empty for
// Monte Carlo variants, whose trial models are not individually persisted.
struct VariantRecord {
    long tag = -1;
    std::string digest;
    bool cache_hit = false;
    double wall_ms = 0.0;
    std::string status = "ok";
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::string mode;
    bool success = false;
    std::vector<VariantRecord> variants;  // sorted by tag
};

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest);

struct RunOutcome {
    RunManifest manifest;
    bool claims_pass = true;  // scenario claim verdict; true elsewhere
};

// Executes the configured mode end to end, writing every artifact under
// config.out_dir (report files, plots, rasters, scenario report,
// manifest.json). A failing variant still produces a partial manifest before
// the error propagates.
RunOutcome run_audit(const AuditConfig& config);

}  // namespace looaudit
