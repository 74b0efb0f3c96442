#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "looaudit/config.hpp"
#include "looaudit/dataset.hpp"
#include "looaudit/errors.hpp"
#include "looaudit/harness.hpp"
#include "looaudit/metrics.hpp"
#include "looaudit/plots.hpp"
#include "looaudit/rules.hpp"

using namespace looaudit;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    fs::path dir = fs::path("/tmp") / ("looaudit_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string error_text(const std::function<void()>& thrower) {
    try {
        thrower();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

// Small MLP audit over blob data; out and parallelism vary per test.
std::string audit_config_text(const std::string& out_dir, int parallelism,
                              const std::string& cache_dir = "") {
    std::ostringstream cfg;
    cfg << "mode = \"luf\"\n";
    cfg << "parallelism = " << parallelism << "\n";
    cfg << "out = \"" << out_dir << "\"\n";
    if (!cache_dir.empty()) cfg << "cache = \"" << cache_dir << "\"\n";
    cfg << "[dataset]\n"
           "kind = \"synthetic\"\n"
           "synthetic = \"gaussian-blobs\"\n"
           "n = 24\n"
           "stddev = 0.4\n"
           "seed = 7\n"
           "means = [[0.0, 0.0], [3.0, 3.0]]\n"
           "[split]\n"
           "train_fraction = 0.75\n"
           "o_size = 6\n"
           "seed = 2\n"
           "[rule]\n"
           "kind = \"standard-mlp\"\n"
           "hidden = [8]\n"
           "epochs = 40\n"
           "seed = 1\n";
    return cfg.str();
}

}  // namespace

TEST_CASE("a minimal config parses with documented defaults") {
    AuditConfig cfg = parse_config_text("[rule]\nkind = \"knn\"\n", "inline");
    CHECK(cfg.mode == AuditMode::luf);
    CHECK(cfg.parallelism == 1);
    CHECK(cfg.out_dir == "out");
    CHECK_FALSE(cfg.use_cache);
    CHECK(cfg.synthetic);
    CHECK(cfg.train_fraction == 0.8);
    CHECK(cfg.o_size == 0);
    CHECK(cfg.trials == 1000);
    CHECK(cfg.boundary_grid == 200);
    CHECK_FALSE(cfg.eval_test_only);
    REQUIRE(cfg.rules.size() == 1);
    CHECK(cfg.rules[0].kind == RuleKind::knn);
    CHECK(cfg.rules[0].k == 1);
    CHECK(cfg.rules[0].epochs == 100);
    CHECK(cfg.rules[0].batch_size == 32);

    // The origin label feeds error messages, not the identity of the config.
    AuditConfig other = parse_config_text("[rule]\nkind = \"knn\"\n", "elsewhere");
    CHECK(cfg.hash() == other.hash());
    CHECK(cfg.canonical() == other.canonical());
}

TEST_CASE("config errors carry the offending key and line") {
    std::string oversized =
        "[dataset]\n"
        "kind = \"synthetic\"\n"
        "synthetic = \"uniform-bernoulli-square\"\n"
        "n = 10\n"
        "[split]\n"
        "train_fraction = 0.8\n"
        "o_size = 9\n"
        "[rule]\n"
        "kind = \"knn\"\n";
    std::string msg = error_text([&] { parse_config_text(oversized, "cfg.toml"); });
    CHECK(msg.find("split.o_size") != std::string::npos);

    std::string duplicate_key =
        "[rule]\n"
        "kind = \"knn\"\n"
        "kind = \"linear\"\n";
    msg = error_text([&] { parse_config_text(duplicate_key, "cfg.toml"); });
    CHECK(msg.find("duplicate key") != std::string::npos);
    CHECK(msg.find("first at line 2") != std::string::npos);
    CHECK(msg.find("cfg.toml:3") != std::string::npos);

    std::string duplicate_section =
        "[rule]\n"
        "kind = \"knn\"\n"
        "[rule]\n";
    msg = error_text([&] { parse_config_text(duplicate_section, "cfg.toml"); });
    CHECK(msg.find("duplicate section [rule]") != std::string::npos);
    CHECK(msg.find("first at line 1") != std::string::npos);

    std::string unknown_key =
        "[dataset]\n"
        "bogus = 1\n"
        "[rule]\n"
        "kind = \"knn\"\n";
    msg = error_text([&] { parse_config_text(unknown_key, "cfg.toml"); });
    CHECK(msg.find("unknown key 'dataset.bogus'") != std::string::npos);

    std::string unknown_section =
        "[wat]\n"
        "x = 1\n"
        "[rule]\n"
        "kind = \"knn\"\n";
    msg = error_text([&] { parse_config_text(unknown_section, "cfg.toml"); });
    CHECK(msg.find("unknown section [wat]") != std::string::npos);
}

TEST_CASE("report bytes are independent of the parallelism degree") {
    std::string out1 = fresh_dir("par1");
    std::string out8 = fresh_dir("par8");
    RunOutcome r1 = run_audit(parse_config_text(audit_config_text(out1, 1), "inline"));
    RunOutcome r8 = run_audit(parse_config_text(audit_config_text(out8, 8), "inline"));
    CHECK(r1.manifest.success);
    CHECK(r8.manifest.success);
    CHECK(read_file(out1 + "/report.json") == read_file(out8 + "/report.json"));
    CHECK(read_file(out1 + "/per_point.csv") == read_file(out8 + "/per_point.csv"));
    CHECK(read_file(out1 + "/confidence_curve.svg") == read_file(out8 + "/confidence_curve.svg"));
    CHECK(read_file(out1 + "/flip_histogram.svg") == read_file(out8 + "/flip_histogram.svg"));

    // Same trained variants in both manifests, digests included.
    REQUIRE(r1.manifest.variants.size() == r8.manifest.variants.size());
    for (std::size_t i = 0; i < r1.manifest.variants.size(); ++i) {
        CHECK(r1.manifest.variants[i].tag == r8.manifest.variants[i].tag);
        CHECK(r1.manifest.variants[i].digest == r8.manifest.variants[i].digest);
    }
}

TEST_CASE("a warm cache skips every retraining and reproduces the report") {
    std::string cache = fresh_dir("cache");
    std::string cold_out = fresh_dir("cold");
    std::string warm_out = fresh_dir("warm");

    RunOutcome cold = run_audit(parse_config_text(audit_config_text(cold_out, 2, cache), "inline"));
    REQUIRE(cold.manifest.success);
    for (const VariantRecord& v : cold.manifest.variants) CHECK_FALSE(v.cache_hit);

    RunOutcome warm = run_audit(parse_config_text(audit_config_text(warm_out, 2, cache), "inline"));
    REQUIRE(warm.manifest.success);
    for (const VariantRecord& v : warm.manifest.variants) CHECK(v.cache_hit);
    CHECK(read_file(cold_out + "/report.json") == read_file(warm_out + "/report.json"));

    // Flipping one stored byte must force a retrain, never silent reuse.
    fs::path victim;
    for (const auto& entry : fs::directory_iterator(cache)) {
        if (entry.path().extension() == ".model") {
            victim = entry.path();
            break;
        }
    }
    REQUIRE(!victim.empty());
    std::string bytes = read_file(victim.string());
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x5a);
    std::ofstream(victim, std::ios::binary) << bytes;

    std::string repaired_out = fresh_dir("repaired");
    RunOutcome repaired =
        run_audit(parse_config_text(audit_config_text(repaired_out, 2, cache), "inline"));
    REQUIRE(repaired.manifest.success);
    int misses = 0;
    for (const VariantRecord& v : repaired.manifest.variants) {
        if (!v.cache_hit) ++misses;
    }
    CHECK(misses == 1);
    CHECK(read_file(cold_out + "/report.json") == read_file(repaired_out + "/report.json"));
}

TEST_CASE("the manifest lists every trained variant exactly once") {
    std::string out = fresh_dir("manifest");
    RunOutcome outcome = run_audit(parse_config_text(audit_config_text(out, 2), "inline"));
    REQUIRE(outcome.manifest.success);
    REQUIRE(outcome.manifest.variants.size() == 7);  // baseline + o_size
    CHECK(outcome.manifest.variants.front().tag == -1);
    std::set<long> tags;
    for (const VariantRecord& v : outcome.manifest.variants) {
        CHECK(tags.insert(v.tag).second);  // no duplicates
        CHECK(v.status == "ok");
        CHECK_FALSE(v.digest.empty());
    }

    // The non-baseline tags are exactly the removals reported on.
    nlohmann::json report = nlohmann::json::parse(read_file(out + "/report.json"));
    std::set<long> reported;
    for (const auto& row : report.at("flip_fractions")) {
        reported.insert(row.at("removed_id").get<long>());
    }
    tags.erase(-1);
    CHECK(tags == reported);

    nlohmann::json manifest = nlohmann::json::parse(read_file(out + "/manifest.json"));
    CHECK(manifest.at("schema") == "looaudit-manifest-v1");
    CHECK(manifest.at("variants").size() == 7);

    std::string seed_out = fresh_dir("manifest_seeds");
    std::string seed_cfg = audit_config_text(seed_out, 1);
    seed_cfg.replace(seed_cfg.find("\"luf\""), 5, "\"seed-instability\"");
    seed_cfg += "[audit]\nseeds = [3, 4, 5]\n";
    RunOutcome seeded = run_audit(parse_config_text(seed_cfg, "inline"));
    REQUIRE(seeded.manifest.variants.size() == 3);  // baseline under seed 3, then variants
    CHECK(seeded.manifest.variants[0].tag == -1);
    CHECK(seeded.manifest.variants[1].tag == 4);
    CHECK(seeded.manifest.variants[2].tag == 5);
}

TEST_CASE("scenario configs run end to end through the harness") {
    std::string out = fresh_dir("scenario");
    std::string cfg =
        "mode = \"scenario\"\n"
        "out = \"" + out + "\"\n"
        "[scenario]\n"
        "name = \"prop1\"\n";
    RunOutcome outcome = run_audit(parse_config_text(cfg, "inline"));
    CHECK(outcome.claims_pass);
    CHECK(outcome.manifest.success);
    CHECK(outcome.manifest.mode == "scenario");
    nlohmann::json scenario = nlohmann::json::parse(read_file(out + "/scenario.json"));
    CHECK(scenario.at("name") == "prop1");
    CHECK(scenario.at("all_pass") == true);
}

TEST_CASE("a zero-unfairness report plots as a flat line at zero") {
    Dataset ds;
    ds.features = Matrix(5, 2, {
        0.0, 0.0,  // 0: duplicated point
        0.0, 0.0,  // 1: identical twin
        2.0, 0.0,  // 2
        0.0, 2.0,  // 3
        0.4, 0.0,  // 4: probe
    });
    ds.labels = {1, 1, 0, 0, 1};
    ds.num_classes = 2;
    ds.point_ids = {0, 1, 2, 3, 4};
    ds.feature_names = {"x0", "x1"};
    SplitPlan plan;
    plan.train_ids = {0, 1, 2, 3};
    plan.leave_out_ids = {0};
    plan.test_ids = {4};

    LearningRule rule;
    rule.kind = RuleKind::knn;
    LufReport report = audit_deterministic(rule, ds, plan, {});
    REQUIRE(report.expected_luf == 0.0);

    std::string svg = confidence_curve_svg(report);
    std::size_t start = svg.find("<polyline points=\"");
    REQUIRE(start != std::string::npos);
    start += std::string("<polyline points=\"").size();
    std::string points = svg.substr(start, svg.find('"', start) - start);
    std::istringstream stream(points);
    std::string pair;
    int seen = 0;
    while (stream >> pair) {
        ++seen;
        CHECK(pair.substr(pair.find(',')) == ",420");  // the y pixel of value 0
    }
    CHECK(seen == 5);
}

TEST_CASE("a removal that flips every prediction plots as one full bar") {
    Dataset ds;
    ds.features = Matrix(3, 2, {0.0, 0.0, 3.0, 0.0, 1.0, 0.0});
    ds.labels = {0, 1, 0};
    ds.num_classes = 2;
    ds.point_ids = {0, 1, 2};
    ds.feature_names = {"x0", "x1"};
    SplitPlan plan;
    plan.train_ids = {0, 1};
    plan.leave_out_ids = {0};
    plan.test_ids = {2};

    LearningRule rule;
    rule.kind = RuleKind::knn;
    LufReport report = audit_deterministic(rule, ds, plan, {2});
    REQUIRE(report.expected_luf == 1.0);
    REQUIRE(report.flip_fractions.size() == 1);
    REQUIRE(report.flip_fractions[0].fraction == 1.0);

    std::string svg = flip_histogram_svg(report);
    std::size_t full_bars = 0;
    std::size_t empty_bars = 0;
    for (std::size_t pos = svg.find("<rect x="); pos != std::string::npos;
         pos = svg.find("<rect x=", pos + 1)) {
        std::string rect = svg.substr(pos, svg.find("/>", pos) - pos);
        if (rect.find("height=\"380\"") != std::string::npos) ++full_bars;
        if (rect.find("height=\"0\"") != std::string::npos) ++empty_bars;
    }
    CHECK(full_bars == 1);  // all mass in the 100% bin
    CHECK(empty_bars == 9);
}

TEST_CASE("plot emission is deterministic and skips empty reports") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::uniform_bernoulli_square;
    spec.n = 16;
    Dataset ds = sample_synthetic(spec);
    SplitPlan plan = make_split(ds, 0.75, 4, 1);
    LearningRule rule;
    rule.kind = RuleKind::knn;
    LufReport report = audit_deterministic(rule, ds, plan, {});

    std::string dir_a = fresh_dir("plots_a");
    std::string dir_b = fresh_dir("plots_b");
    emit_plots(report, dir_a);
    emit_plots(report, dir_b);
    CHECK(read_file(dir_a + "/confidence_curve.svg") == read_file(dir_b + "/confidence_curve.svg"));
    CHECK(read_file(dir_a + "/flip_histogram.svg") == read_file(dir_b + "/flip_histogram.svg"));

    std::string dir_c = fresh_dir("plots_empty");
    emit_plots(LufReport{}, dir_c);
    CHECK_FALSE(fs::exists(fs::path(dir_c) / "confidence_curve.svg"));
    CHECK_FALSE(fs::exists(fs::path(dir_c) / "flip_histogram.svg"));
}
