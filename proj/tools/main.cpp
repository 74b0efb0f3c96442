#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "looaudit/config.hpp"
#include "looaudit/errors.hpp"
#include "looaudit/harness.hpp"
#include "looaudit/hash.hpp"
#include "looaudit/metrics.hpp"
#include "looaudit/report_io.hpp"
#include "looaudit/version.hpp"

namespace {

struct CommonFlags {
    int parallelism = 0;  // 0 = keep config value
    std::string out;
    std::string cache;
    bool no_cache = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--parallelism", flags.parallelism, "Worker threads for variant training")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--cache", flags.cache, "Model cache directory");
    cmd->add_flag("--no-cache", flags.no_cache, "Disable the model cache");
}

void apply_common_flags(looaudit::AuditConfig& config, const CommonFlags& flags) {
    if (flags.parallelism > 0) config.parallelism = flags.parallelism;
    if (!flags.out.empty()) config.out_dir = flags.out;
    if (!flags.cache.empty()) {
        config.cache_dir = flags.cache;
        config.use_cache = true;
    }
    if (flags.no_cache) {
        config.use_cache = false;
        config.cache_dir.clear();
    }
}

int run_configured(looaudit::AuditConfig config) {
    looaudit::RunOutcome outcome = looaudit::run_audit(config);
    if (!outcome.claims_pass) {
        std::cerr << "scenario claims failed; see " << config.out_dir << "/scenario.json\n";
        return 1;
    }
    std::cout << "wrote " << config.out_dir << "/manifest.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic leave-one-out unfairness and stability audits"};
    app.set_version_flag("--version", looaudit::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    CommonFlags audit_flags;
    CLI::App* audit_cmd = app.add_subcommand("audit", "Run the audit mode of a config file");
    audit_cmd->add_option("config", config_path, "Config file")->required();
    add_common_flags(audit_cmd, audit_flags);

    std::string scenario_name;
    CommonFlags scenario_flags;
    looaudit::ScenarioConfig scenario_knobs;
    CLI::App* scenario_cmd =
        app.add_subcommand("scenario", "Run a named self-verifying scenario");
    scenario_cmd
        ->add_option("name", scenario_name, "prop1 | two-circles | dp-bound | figure1")
        ->required();
    scenario_cmd->add_option("--d", scenario_knobs.d, "Disc diameter (two-circles)");
    scenario_cmd->add_option("--n", scenario_knobs.n, "Sample size");
    scenario_cmd->add_option("--grid", scenario_knobs.grid_resolution, "Grid resolution");
    scenario_cmd->add_option("--epsilon", scenario_knobs.epsilon, "Privacy budget (dp-bound)");
    scenario_cmd->add_option("--trials", scenario_knobs.trials, "Monte Carlo trials (dp-bound)");
    scenario_cmd->add_option("--seed", scenario_knobs.seed, "Scenario seed");
    add_common_flags(scenario_cmd, scenario_flags);

    std::string boundary_path;
    CommonFlags boundary_flags;
    CLI::App* boundary_cmd =
        app.add_subcommand("boundary", "Rasterize decision boundaries for a config file");
    boundary_cmd->add_option("config", boundary_path, "Config file")->required();
    add_common_flags(boundary_cmd, boundary_flags);

    double bound_epsilon = 0.0;
    double bound_delta = 0.0;
    CLI::App* bound_cmd =
        app.add_subcommand("bound", "Print the differential-privacy unfairness bound");
    bound_cmd->add_option("--epsilon", bound_epsilon, "Privacy budget")->required();
    bound_cmd->add_option("--delta", bound_delta, "Privacy slack");

    std::string validate_path;
    CLI::App* validate_cmd = app.add_subcommand("validate", "Parse and validate a config file");
    validate_cmd->add_option("config", validate_path, "Config file")->required();

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*audit_cmd) {
            looaudit::AuditConfig config = looaudit::parse_config(config_path);
            apply_common_flags(config, audit_flags);
            return run_configured(std::move(config));
        }
        if (*scenario_cmd) {
            looaudit::AuditConfig config;
            config.mode = looaudit::AuditMode::scenario;
            config.scenario = scenario_knobs;
            config.scenario.name = scenario_name;
            if (scenario_name != "prop1" && scenario_name != "two-circles" &&
                scenario_name != "dp-bound" && scenario_name != "figure1") {
                std::cerr << "unknown scenario \"" << scenario_name
                          << "\"; expected prop1, two-circles, dp-bound or figure1\n";
                return 2;
            }
            apply_common_flags(config, scenario_flags);
            return run_configured(std::move(config));
        }
        if (*boundary_cmd) {
            looaudit::AuditConfig config = looaudit::parse_config(boundary_path);
            config.mode = looaudit::AuditMode::boundary;
            if (config.rules.empty())
                throw looaudit::ConfigError("boundary mode requires a [rule] section");
            apply_common_flags(config, boundary_flags);
            return run_configured(std::move(config));
        }
        if (*bound_cmd) {
            std::cout << looaudit::format_double(looaudit::dp_luf_bound(bound_epsilon, bound_delta))
                      << "\n";
            return 0;
        }
        if (*validate_cmd) {
            looaudit::AuditConfig config = looaudit::parse_config(validate_path);
            std::cout << "ok " << looaudit::hex64(config.hash()) << "\n";
            return 0;
        }
    } catch (const looaudit::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const looaudit::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const looaudit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
