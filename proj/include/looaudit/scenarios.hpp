#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "looaudit/matrix.hpp"

namespace looaudit {

// One checked assertion: pass = (|expected - observed| <= tolerance).
// Inequality claims are encoded as a clamped violation amount with expected
// 0, so the same rule applies.
struct Claim {
    std::string description;
    double expected = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ScenarioResult {
    std::string name;
    std::vector<Claim> claims;
    std::map<std::string, std::string> metadata;  // values pre-formatted

    bool all_pass() const;
    void add_exact(const std::string& description, double expected, double observed);
    void add_violation(const std::string& description, double violation);
};

nlohmann::ordered_json scenario_to_json(const ScenarioResult& result);

// Table rule over its three fixed points: stability rate exactly 0, exact
// per-point values all 1, expected value 1.
ScenarioResult run_prop1_scenario();

// 1-NN on two separated discs: exact value 0 at every in-disc grid probe, a
// flipping probe outside the support, and a privacy-violation witness.
ScenarioResult run_two_circles_scenario(double d, std::size_t n, int grid_resolution,
                                        std::uint64_t seed);

// Noisy-majority on a balanced dataset: Monte Carlo values stay within the
// e^eps - 1 bound plus three standard errors.
ScenarioResult run_dp_bound_scenario(double epsilon, int trials, std::uint64_t seed);

struct Figure1Result {
    ScenarioResult result;
    std::string baseline_ppm;
    std::string variant_ppm;
    std::string difference_ppm;
};

// One-point removal on uniform random-label data: the decision surface
// changes, including far from the removed point. layer_dims is the full
// width list and must start at 2 and end at 1.
Figure1Result run_figure1_scenario(std::size_t n, const std::vector<int>& layer_dims,
                                   int grid_resolution, std::uint64_t seed);

}  // namespace looaudit
