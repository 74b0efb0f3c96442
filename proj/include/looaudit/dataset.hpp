#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "looaudit/matrix.hpp"

namespace looaudit {

// Numeric dataset. point_ids are stable row identities; every split, view
// and report refers to points by id, never by transient position.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 2;
    std::vector<long> point_ids;
    std::vector<std::string> feature_names;

    std::size_t size() const { return point_ids.size(); }
    std::size_t row_of(long point_id) const;  // ArgumentError when unknown
};

void validate_dataset(const Dataset& dataset);

// Immutable index mask over a Dataset; rows are kept in dataset order so the
// only difference between two leave-one-out views is the masked row.
struct DatasetView {
    const Dataset* dataset = nullptr;
    std::vector<std::size_t> rows;

    std::size_t size() const { return rows.size(); }
    long point_id(std::size_t i) const { return dataset->point_ids[rows[i]]; }
    Matrix gather_features() const;
    std::vector<int> gather_labels() const;
    std::vector<long> ids() const;
};

// Disjoint id lists drawn by a seeded shuffle. leave_out_ids is a subset of
// train_ids: left-out points are trained on in the baseline and removed one
// at a time.
struct SplitPlan {
    std::vector<long> train_ids;
    std::vector<long> leave_out_ids;
    std::vector<long> test_ids;
    std::uint64_t seed = 0;
};

enum class LeaveOutSource { train, test };

// train = first floor(n * train_fraction) of a seeded shuffle, test = rest,
// O = first o_size of the shuffled train ids. With LeaveOutSource::test the
// sampled test points are moved into the training set first, so removal
// semantics stay well defined.
SplitPlan make_split(const Dataset& dataset, double train_fraction, std::size_t o_size,
                     std::uint64_t seed, LeaveOutSource o_source = LeaveOutSource::train);

DatasetView full_view(const Dataset& dataset);
DatasetView view_of_ids(const Dataset& dataset, const std::vector<long>& ids);
DatasetView train_view(const Dataset& dataset, const SplitPlan& plan);

// Training view with exactly removed_id absent; removed_id must be in O.
DatasetView leave_one_out(const Dataset& dataset, const SplitPlan& plan, long removed_id);

enum class SyntheticKind { uniform_bernoulli_square, two_circles, gaussian_blobs };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::uniform_bernoulli_square;
    std::size_t n = 100;
    double label_probability = 0.5;  // uniform-bernoulli-square
    double diameter = 1.0;           // two-circles; centers are 3*diameter apart
    std::vector<std::vector<double>> means;  // gaussian-blobs, one per class
    double stddev = 1.0;
    std::uint64_t seed = 0;
};

Dataset sample_synthetic(const SyntheticSpec& spec);

// Per-class counts, used to reject degenerate two-circles samples.
std::vector<std::size_t> class_counts(const Dataset& dataset);

}  // namespace looaudit
