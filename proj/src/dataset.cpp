#include "looaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>

#include "looaudit/errors.hpp"
#include "looaudit/rng.hpp"

namespace looaudit {
namespace {

void fisher_yates(std::vector<long>& ids, Rng& rng) {
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(ids[i - 1], ids[j]);
    }
}

}  // namespace

std::size_t Dataset::row_of(long point_id) const {
    for (std::size_t i = 0; i < point_ids.size(); ++i) {
        if (point_ids[i] == point_id) {
            return i;
        }
    }
    throw ArgumentError("unknown point id " + std::to_string(point_id));
}

void validate_dataset(const Dataset& dataset) {
    std::size_t n = dataset.point_ids.size();
    if (n == 0) {
        throw ConfigError("dataset is empty");
    }
    if (dataset.features.rows() != n || dataset.labels.size() != n) {
        throw DimensionError("dataset row counts disagree");
    }
    if (dataset.num_classes < 2) {
        throw ConfigError("dataset needs at least 2 classes");
    }
    std::set<long> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (dataset.labels[i] < 0 || dataset.labels[i] >= dataset.num_classes) {
            throw ConfigError("label out of range at row " + std::to_string(i));
        }
        if (!seen.insert(dataset.point_ids[i]).second) {
            throw ConfigError("duplicate point id " + std::to_string(dataset.point_ids[i]));
        }
    }
}

Matrix DatasetView::gather_features() const {
    Matrix out(rows.size(), dataset->features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = dataset->features.row_ptr(rows[i]);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

std::vector<int> DatasetView::gather_labels() const {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i] = dataset->labels[rows[i]];
    }
    return out;
}

std::vector<long> DatasetView::ids() const {
    std::vector<long> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i] = dataset->point_ids[rows[i]];
    }
    return out;
}

SplitPlan make_split(const Dataset& dataset, double train_fraction, std::size_t o_size,
                     std::uint64_t seed, LeaveOutSource o_source) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    std::vector<long> shuffled = dataset.point_ids;
    Rng rng = Rng::derive(seed, Stream::split);
    fisher_yates(shuffled, rng);

    std::size_t n = shuffled.size();
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * train_fraction));
    if (n_train == 0 || n_train == n) {
        throw ConfigError("train_fraction leaves an empty train or test set");
    }

    SplitPlan plan;
    plan.seed = seed;
    plan.train_ids.assign(shuffled.begin(), shuffled.begin() + n_train);
    plan.test_ids.assign(shuffled.begin() + n_train, shuffled.end());

    if (o_source == LeaveOutSource::train) {
        if (o_size > plan.train_ids.size()) {
            throw ConfigError("o_size exceeds the training set size");
        }
        plan.leave_out_ids.assign(plan.train_ids.begin(), plan.train_ids.begin() + o_size);
    } else {
        // Move the sampled test points into train so removing them is defined.
        if (o_size > plan.test_ids.size()) {
            throw ConfigError("o_size exceeds the test set size");
        }
        plan.leave_out_ids.assign(plan.test_ids.begin(), plan.test_ids.begin() + o_size);
        plan.test_ids.erase(plan.test_ids.begin(),
                            plan.test_ids.begin() + static_cast<long>(o_size));
        plan.train_ids.insert(plan.train_ids.end(), plan.leave_out_ids.begin(),
                              plan.leave_out_ids.end());
    }

    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    std::sort(plan.leave_out_ids.begin(), plan.leave_out_ids.end());
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    return plan;
}

DatasetView full_view(const Dataset& dataset) {
    DatasetView view;
    view.dataset = &dataset;
    view.rows.resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        view.rows[i] = i;
    }
    return view;
}

DatasetView view_of_ids(const Dataset& dataset, const std::vector<long>& ids) {
    std::unordered_map<long, std::size_t> row_of;
    row_of.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        row_of[dataset.point_ids[i]] = i;
    }
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (long id : ids) {
        auto it = row_of.find(id);
        if (it == row_of.end()) {
            throw ArgumentError("unknown point id " + std::to_string(id));
        }
        rows.push_back(it->second);
    }
    std::sort(rows.begin(), rows.end());
    DatasetView view;
    view.dataset = &dataset;
    view.rows = std::move(rows);
    return view;
}

DatasetView train_view(const Dataset& dataset, const SplitPlan& plan) {
    return view_of_ids(dataset, plan.train_ids);
}

DatasetView leave_one_out(const Dataset& dataset, const SplitPlan& plan, long removed_id) {
    if (!std::binary_search(plan.leave_out_ids.begin(), plan.leave_out_ids.end(),
                            removed_id)) {
        throw ArgumentError("point " + std::to_string(removed_id) +
                            " is not in the leave-out set");
    }
    std::vector<long> kept;
    kept.reserve(plan.train_ids.size() - 1);
    for (long id : plan.train_ids) {
        if (id != removed_id) {
            kept.push_back(id);
        }
    }
    return view_of_ids(dataset, kept);
}

Dataset sample_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0) {
        throw ConfigError("synthetic sample size must be positive");
    }
    Rng rng = Rng::derive(spec.seed, Stream::synth);
    Dataset ds;
    ds.point_ids.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        ds.point_ids[i] = static_cast<long>(i);
    }

    switch (spec.kind) {
        case SyntheticKind::uniform_bernoulli_square: {
            if (spec.label_probability < 0.0 || spec.label_probability > 1.0) {
                throw ConfigError("label_probability must lie in [0, 1]");
            }
            ds.features = Matrix(spec.n, 2);
            ds.labels.resize(spec.n);
            ds.num_classes = 2;
            for (std::size_t i = 0; i < spec.n; ++i) {
                ds.features.at(i, 0) = rng.next_double();
                ds.features.at(i, 1) = rng.next_double();
                ds.labels[i] = (rng.next_double() < spec.label_probability) ? 1 : 0;
            }
            ds.feature_names = {"x0", "x1"};
            break;
        }
        case SyntheticKind::two_circles: {
            if (!(spec.diameter > 0.0)) {
                throw ConfigError("two-circles diameter must be positive");
            }
            double r = spec.diameter / 2.0;
            double cx[2] = {0.0, 3.0 * spec.diameter};
            ds.features = Matrix(spec.n, 2);
            ds.labels.resize(spec.n);
            ds.num_classes = 2;
            for (std::size_t i = 0; i < spec.n; ++i) {
                int c = (rng.next_double() < 0.5) ? 0 : 1;
                // Rejection sample strictly inside the disc.
                double dx = 0.0;
                double dy = 0.0;
                for (;;) {
                    dx = rng.next_uniform(-r, r);
                    dy = rng.next_uniform(-r, r);
                    if (dx * dx + dy * dy < r * r) {
                        break;
                    }
                }
                ds.features.at(i, 0) = cx[c] + dx;
                ds.features.at(i, 1) = dy;
                ds.labels[i] = c;
            }
            ds.feature_names = {"x0", "x1"};
            break;
        }
        case SyntheticKind::gaussian_blobs: {
            if (spec.means.size() < 2) {
                throw ConfigError("gaussian-blobs needs at least 2 class means");
            }
            if (!(spec.stddev > 0.0)) {
                throw ConfigError("gaussian-blobs stddev must be positive");
            }
            std::size_t dim = spec.means.front().size();
            for (const auto& m : spec.means) {
                if (m.size() != dim || dim == 0) {
                    throw ConfigError("gaussian-blobs means must share a positive dimension");
                }
            }
            ds.features = Matrix(spec.n, dim);
            ds.labels.resize(spec.n);
            ds.num_classes = static_cast<int>(spec.means.size());
            for (std::size_t i = 0; i < spec.n; ++i) {
                int c = static_cast<int>(i % spec.means.size());
                for (std::size_t j = 0; j < dim; ++j) {
                    ds.features.at(i, j) = spec.means[c][j] + spec.stddev * rng.next_gaussian();
                }
                ds.labels[i] = c;
            }
            for (std::size_t j = 0; j < dim; ++j) {
                ds.feature_names.push_back("x" + std::to_string(j));
            }
            break;
        }
    }
    return ds;
}

std::vector<std::size_t> class_counts(const Dataset& dataset) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.num_classes), 0);
    for (int label : dataset.labels) {
        ++counts[static_cast<std::size_t>(label)];
    }
    return counts;
}

}  // namespace looaudit
