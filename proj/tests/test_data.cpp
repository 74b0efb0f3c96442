#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "looaudit/dataset.hpp"
#include "looaudit/errors.hpp"
#include "looaudit/preprocess.hpp"
#include "looaudit/rng.hpp"

using namespace looaudit;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/looaudit_test_") + name;
    std::ofstream out(path, std::ios::trunc);
    out << content;
    out.close();
    return path;
}

double dist2(const Matrix& m, std::size_t a, std::size_t b) {
    double dx = m.at(a, 0) - m.at(b, 0);
    double dy = m.at(a, 1) - m.at(b, 1);
    return dx * dx + dy * dy;
}

}  // namespace

TEST_CASE("csv loading yields the expected dataset and encodings") {
    std::string path = write_temp_csv("basic.csv",
                                      "age,city,label\n"
                                      "1,A,0\n"
                                      "2,B,1\n"
                                      "3,C,0\n");
    PreprocessSpec spec;
    spec.overrides["city"] = ColumnKind::one_hot;
    LoadResult res = load_csv(path, spec, "label");
    const Dataset& ds = res.dataset;
    CHECK(ds.size() == 3);
    CHECK(ds.num_classes == 2);
    // age standardized: {1,2,3} -> +-sqrt(3/2)
    double v = 1.224744871391589;
    CHECK(ds.features.at(0, 0) == doctest::Approx(-v).epsilon(1e-12));
    CHECK(ds.features.at(1, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(ds.features.at(2, 0) == doctest::Approx(v).epsilon(1e-12));
    // one-hot city: 3 columns, sorted vocabulary
    REQUIRE(ds.features.cols() == 4);
    CHECK(ds.feature_names[1] == "city=A");
    CHECK(ds.feature_names[2] == "city=B");
    CHECK(ds.feature_names[3] == "city=C");
    CHECK(ds.features.at(0, 1) == 1.0);
    CHECK(ds.features.at(1, 2) == 1.0);
    CHECK(ds.features.at(2, 3) == 1.0);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});

    std::remove(path.c_str());
}

TEST_CASE("csv ingestion errors carry position information") {
    std::string path = write_temp_csv("bad.csv",
                                      "a,label\n"
                                      "1,0\n"
                                      "oops,1\n");
    try {
        load_csv(path, PreprocessSpec{}, "label");
        FAIL("expected IngestionError");
    } catch (const IngestionError& e) {
        CHECK(e.row == 3);
        CHECK(e.column == 1);
    }
    std::remove(path.c_str());

    std::string ragged = write_temp_csv("ragged.csv",
                                        "a,label\n"
                                        "1,0,9\n");
    CHECK_THROWS_AS(load_csv(ragged, PreprocessSpec{}, "label"), IngestionError);
    std::remove(ragged.c_str());

    std::string missing = write_temp_csv("nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(missing, PreprocessSpec{}, "label"), IngestionError);
    std::remove(missing.c_str());
}

TEST_CASE("fitted preprocessing is reused verbatim and serializes identically") {
    std::string train = write_temp_csv("fit_train.csv",
                                       "x,city,label\n"
                                       "1,A,0\n"
                                       "5,B,1\n");
    PreprocessSpec spec;
    spec.overrides["city"] = ColumnKind::one_hot;
    LoadResult first = load_csv(train, spec, "label");
    LoadResult again = load_csv(train, spec, "label");
    CHECK(first.fitted.serialize() == again.fitted.serialize());

    std::string test = write_temp_csv("fit_test.csv",
                                      "x,city,label\n"
                                      "9,A,1\n");
    LoadResult reused = load_csv_fitted(test, first.fitted, "label");
    // x standardized with the TRAINING mean 3 and stddev 2: (9-3)/2 = 3.
    CHECK(reused.dataset.features.at(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    std::remove(train.c_str());
    std::remove(test.c_str());
}

TEST_CASE("unknown categories follow the configured policy") {
    std::string train = write_temp_csv("cat_train.csv",
                                       "city,label\nA,0\nB,1\n");
    PreprocessSpec spec;
    spec.default_kind = ColumnKind::one_hot;
    LoadResult fitted = load_csv(train, spec, "label");

    std::string test = write_temp_csv("cat_test.csv", "city,label\nZ,0\n");
    LoadResult zeros = load_csv_fitted(test, fitted.fitted, "label");
    CHECK(zeros.dataset.features.at(0, 0) == 0.0);
    CHECK(zeros.dataset.features.at(0, 1) == 0.0);
    CHECK_FALSE(zeros.warnings.empty());

    FittedPreprocess strict = fitted.fitted;
    strict.unknown_policy = UnknownCategoryPolicy::error;
    CHECK_THROWS_AS(load_csv_fitted(test, strict, "label"), IngestionError);
    std::remove(train.c_str());
    std::remove(test.c_str());
}

TEST_CASE("min-max and constant columns behave as documented") {
    std::string path = write_temp_csv("minmax.csv",
                                      "a,b,label\n"
                                      "2,7,0\n"
                                      "4,7,1\n"
                                      "6,7,0\n");
    PreprocessSpec spec;
    spec.overrides["a"] = ColumnKind::min_max;
    spec.overrides["b"] = ColumnKind::min_max;
    LoadResult res = load_csv(path, spec, "label");
    CHECK(res.dataset.features.at(0, 0) == 0.0);
    CHECK(res.dataset.features.at(1, 0) == 0.5);
    CHECK(res.dataset.features.at(2, 0) == 1.0);
    // constant column maps to 0 under min-max
    CHECK(res.dataset.features.at(0, 1) == 0.0);
    CHECK(res.dataset.features.at(2, 1) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("splits are deterministic with exact sizes and disjoint ids") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::uniform_bernoulli_square;
    spec.n = 50;
    spec.seed = 21;
    Dataset ds = sample_synthetic(spec);

    SplitPlan a = make_split(ds, 0.8, 10, 77);
    SplitPlan b = make_split(ds, 0.8, 10, 77);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.leave_out_ids == b.leave_out_ids);
    CHECK(a.test_ids == b.test_ids);
    CHECK(a.train_ids.size() == 40);
    CHECK(a.test_ids.size() == 10);
    CHECK(a.leave_out_ids.size() == 10);
    CHECK(std::is_sorted(a.train_ids.begin(), a.train_ids.end()));

    std::set<long> train(a.train_ids.begin(), a.train_ids.end());
    for (long id : a.leave_out_ids) CHECK(train.count(id) == 1);
    for (long id : a.test_ids) CHECK(train.count(id) == 0);

    SplitPlan c = make_split(ds, 0.8, 10, 78);
    CHECK(a.train_ids != c.train_ids);
}

TEST_CASE("leave-out points can be drawn from the held-out side") {
    SyntheticSpec spec;
    spec.n = 30;
    spec.seed = 5;
    Dataset ds = sample_synthetic(spec);
    SplitPlan plan = make_split(ds, 0.8, 4, 9, LeaveOutSource::test);
    // 24 original train points plus the 4 adopted test points.
    CHECK(plan.train_ids.size() == 28);
    CHECK(plan.test_ids.size() == 2);
    std::set<long> train(plan.train_ids.begin(), plan.train_ids.end());
    for (long id : plan.leave_out_ids) CHECK(train.count(id) == 1);
    for (long id : plan.test_ids) CHECK(train.count(id) == 0);
}

TEST_CASE("oversized o_size is a configuration error") {
    SyntheticSpec spec;
    spec.n = 10;
    spec.seed = 1;
    Dataset ds = sample_synthetic(spec);
    CHECK_THROWS_AS(make_split(ds, 0.5, 6, 0), ConfigError);
    CHECK_THROWS_AS(make_split(ds, 1.2, 1, 0), ConfigError);
    CHECK_THROWS_AS(make_split(ds, 0.0, 1, 0), ConfigError);
}

TEST_CASE("shuffle membership is unbiased across seeds") {
    SyntheticSpec spec;
    spec.n = 20;
    spec.seed = 3;
    Dataset ds = sample_synthetic(spec);
    // Point 0 should land in train about 50% of the time at fraction 0.5.
    int in_train = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        SplitPlan plan = make_split(ds, 0.5, 1, seed);
        std::set<long> train(plan.train_ids.begin(), plan.train_ids.end());
        in_train += train.count(0) ? 1 : 0;
    }
    // Binomial(200, 0.5): 3.5 sigma is about 25.
    CHECK(in_train > 75);
    CHECK(in_train < 125);
}

TEST_CASE("leave_one_out removes exactly the requested row") {
    SyntheticSpec spec;
    spec.n = 20;
    spec.seed = 8;
    Dataset ds = sample_synthetic(spec);
    SplitPlan plan = make_split(ds, 0.8, 5, 2);
    DatasetView base = train_view(ds, plan);
    long removed = plan.leave_out_ids[2];
    DatasetView reduced = leave_one_out(ds, plan, removed);
    CHECK(reduced.size() == base.size() - 1);

    std::vector<long> base_ids = base.ids();
    std::vector<long> reduced_ids = reduced.ids();
    CHECK(std::is_sorted(reduced_ids.begin(), reduced_ids.end()));
    std::vector<long> expected;
    for (long id : base_ids)
        if (id != removed) expected.push_back(id);
    CHECK(reduced_ids == expected);

    CHECK_THROWS_AS(leave_one_out(ds, plan, 99999), ArgumentError);
}

TEST_CASE("two-circles samples stay inside separated discs") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::two_circles;
    spec.n = 40;
    spec.diameter = 1.0;
    spec.seed = 4;
    Dataset ds = sample_synthetic(spec);
    REQUIRE(ds.size() == 40);
    double r = spec.diameter / 2.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double cx = ds.labels[i] == 0 ? 0.0 : 3.0 * spec.diameter;
        double dx = ds.features.at(i, 0) - cx;
        double dy = ds.features.at(i, 1);
        CHECK(dx * dx + dy * dy < r * r);
    }
    // Cross-class separation: centers 3d apart, discs of radius d/2.
    double min_cross = 1e18;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.size(); ++j)
            if (ds.labels[i] != ds.labels[j]) min_cross = std::min(min_cross, dist2(ds.features, i, j));
    CHECK(std::sqrt(min_cross) >= 2.0 * spec.diameter - 1e-12);

    Dataset again = sample_synthetic(spec);
    CHECK(ds.features.values() == again.features.values());
    CHECK(ds.labels == again.labels);
}

TEST_CASE("bernoulli labels honor the probability parameter") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::uniform_bernoulli_square;
    spec.n = 200;
    spec.label_probability = 0.0;
    spec.seed = 10;
    Dataset ds = sample_synthetic(spec);
    for (int label : ds.labels) CHECK(label == 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.features.at(i, 0) >= 0.0);
        CHECK(ds.features.at(i, 0) < 1.0);
        CHECK(ds.features.at(i, 1) >= 0.0);
        CHECK(ds.features.at(i, 1) < 1.0);
    }

    spec.label_probability = 1.5;
    CHECK_THROWS_AS(sample_synthetic(spec), ConfigError);
}

TEST_CASE("gaussian blobs take one mean per class") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::gaussian_blobs;
    spec.n = 30;
    spec.means = {{0.0, 0.0}, {10.0, 10.0}};
    spec.stddev = 0.1;
    spec.seed = 6;
    Dataset ds = sample_synthetic(spec);
    CHECK(ds.num_classes == 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double cx = ds.labels[i] == 0 ? 0.0 : 10.0;
        CHECK(std::abs(ds.features.at(i, 0) - cx) < 2.0);
    }
    std::vector<std::size_t> counts = class_counts(ds);
    CHECK(counts[0] == 15);
    CHECK(counts[1] == 15);

    spec.means = {{0.0, 0.0}};
    CHECK_THROWS_AS(sample_synthetic(spec), ConfigError);
}

TEST_CASE("dataset validation catches inconsistent containers") {
    Dataset ds;
    ds.features = Matrix(2, 1, {0.0, 1.0});
    ds.labels = {0, 1};
    ds.num_classes = 2;
    ds.point_ids = {0, 1};
    ds.feature_names = {"x"};
    validate_dataset(ds);

    Dataset dup = ds;
    dup.point_ids = {0, 0};
    CHECK_THROWS_AS(validate_dataset(dup), ConfigError);

    Dataset range = ds;
    range.labels = {0, 5};
    CHECK_THROWS_AS(validate_dataset(range), ConfigError);

    CHECK(ds.row_of(1) == 1);
    CHECK_THROWS_AS(ds.row_of(7), ArgumentError);
}
