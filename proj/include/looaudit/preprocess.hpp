#pragma once

#include <map>
#include <string>
#include <vector>

#include "looaudit/dataset.hpp"

namespace looaudit {

enum class ColumnKind { one_hot, standardize, min_max, passthrough };

enum class UnknownCategoryPolicy { zeros_with_warning, error };

// Per-column directives, keyed by header name. Columns without an override
// use default_kind.
struct PreprocessSpec {
    ColumnKind default_kind = ColumnKind::standardize;
    std::map<std::string, ColumnKind> overrides;
    UnknownCategoryPolicy unknown_policy = UnknownCategoryPolicy::zeros_with_warning;
};

// Statistics fitted exactly once; reused unchanged for every leave-one-out
// variant so preprocessing never contributes to instability.
struct FittedPreprocess {
    struct Column {
        std::string name;
        ColumnKind kind = ColumnKind::passthrough;
        std::vector<std::string> vocabulary;  // one-hot, sorted
        double mean = 0.0;
        double stddev = 1.0;  // population std; 1 when the column is constant
        double lo = 0.0;
        double hi = 1.0;
    };
    std::vector<Column> columns;
    // Distinct label spellings in code order; reused so variant files can
    // never permute the class encoding.
    std::vector<std::string> label_values;
    UnknownCategoryPolicy unknown_policy = UnknownCategoryPolicy::zeros_with_warning;

    std::size_t output_dim() const;
    std::vector<std::string> output_names() const;
    // Deterministic text form, used to assert stats are identical across runs.
    std::string serialize() const;
};

struct LoadResult {
    Dataset dataset;
    FittedPreprocess fitted;
    std::vector<std::string> warnings;
};

// Pinned CSV dialect: comma-separated, UTF-8, first row is the header,
// '.' decimal separator. Fits preprocessing on all rows of the file and
// returns the numeric dataset; point_ids are row indices.
LoadResult load_csv(const std::string& path, const PreprocessSpec& spec,
                    const std::string& label_column);

// Loads a CSV against already-fitted statistics (same header required).
// Unseen categories follow fitted.unknown_policy.
LoadResult load_csv_fitted(const std::string& path, const FittedPreprocess& fitted,
                           const std::string& label_column);

}  // namespace looaudit
