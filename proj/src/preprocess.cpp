#include "looaudit/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // cell text, file line = index + 2
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

RawTable read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open file: " + path);
    }
    RawTable table;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1) {
            table.header = split_line(line);
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw IngestionError("row has " + std::to_string(cells.size()) +
                                     " cells, header has " +
                                     std::to_string(table.header.size()),
                                 line_no);
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) {
        throw IngestionError("file has no header row: " + path);
    }
    if (table.rows.empty()) {
        throw IngestionError("file has no data rows: " + path);
    }
    return table;
}

double parse_double(const std::string& cell, long line_no, long column) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || cell.empty()) {
        throw IngestionError("cell '" + cell + "' is not a number", line_no, column);
    }
    return value;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

// Labels: distinct values ordered numerically when every value parses as an
// integer, lexicographically otherwise. Fitted once, like the columns.
std::vector<std::string> fit_label_values(const RawTable& table, std::size_t label_col) {
    std::set<std::string> distinct;
    for (const auto& row : table.rows) {
        distinct.insert(row[label_col]);
    }
    std::vector<std::string> values(distinct.begin(), distinct.end());
    bool all_int = true;
    std::vector<long> as_int(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string& s = values[i];
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), as_int[i]);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            all_int = false;
            break;
        }
    }
    if (all_int) {
        std::vector<std::size_t> order(values.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return as_int[a] < as_int[b]; });
        std::vector<std::string> sorted(values.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted[i] = values[order[i]];
        }
        values = std::move(sorted);
    }
    return values;
}

std::vector<int> encode_labels(const RawTable& table, std::size_t label_col,
                               const std::vector<std::string>& label_values) {
    std::map<std::string, int> code;
    for (std::size_t i = 0; i < label_values.size(); ++i) {
        code[label_values[i]] = static_cast<int>(i);
    }
    std::vector<int> labels;
    labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto it = code.find(table.rows[r][label_col]);
        if (it == code.end()) {
            throw IngestionError("label value '" + table.rows[r][label_col] +
                                     "' not seen during fitting",
                                 static_cast<long>(r) + 2, static_cast<long>(label_col) + 1);
        }
        labels.push_back(it->second);
    }
    return labels;
}

LoadResult assemble(const RawTable& table, const FittedPreprocess& fitted,
                    std::size_t label_col) {
    LoadResult result;
    result.fitted = fitted;
    Dataset& ds = result.dataset;
    ds.labels = encode_labels(table, label_col, fitted.label_values);
    ds.num_classes = static_cast<int>(fitted.label_values.size());
    ds.feature_names = fitted.output_names();
    ds.features = Matrix(table.rows.size(), fitted.output_dim());
    ds.point_ids.resize(table.rows.size());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        ds.point_ids[r] = static_cast<long>(r);
        long line_no = static_cast<long>(r) + 2;
        std::size_t out = 0;
        std::size_t in = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == label_col) {
                continue;
            }
            const FittedPreprocess::Column& col = fitted.columns[in++];
            const std::string& cell = table.rows[r][c];
            long col_no = static_cast<long>(c) + 1;
            switch (col.kind) {
                case ColumnKind::one_hot: {
                    auto it = std::lower_bound(col.vocabulary.begin(),
                                               col.vocabulary.end(), cell);
                    if (it != col.vocabulary.end() && *it == cell) {
                        std::size_t slot =
                            static_cast<std::size_t>(it - col.vocabulary.begin());
                        ds.features.at(r, out + slot) = 1.0;
                    } else if (fitted.unknown_policy == UnknownCategoryPolicy::error) {
                        throw IngestionError("unseen category '" + cell + "' in column '" +
                                                 col.name + "'",
                                             line_no, col_no);
                    } else {
                        result.warnings.push_back(
                            "row " + std::to_string(line_no) + ", column '" + col.name +
                            "': unseen category '" + cell + "' encoded as zeros");
                    }
                    out += col.vocabulary.size();
                    break;
                }
                case ColumnKind::standardize: {
                    double v = parse_double(cell, line_no, col_no);
                    ds.features.at(r, out++) = (v - col.mean) / col.stddev;
                    break;
                }
                case ColumnKind::min_max: {
                    double v = parse_double(cell, line_no, col_no);
                    double span = col.hi - col.lo;
                    ds.features.at(r, out++) = (span > 0.0) ? (v - col.lo) / span : 0.0;
                    break;
                }
                case ColumnKind::passthrough: {
                    ds.features.at(r, out++) = parse_double(cell, line_no, col_no);
                    break;
                }
            }
        }
    }
    validate_dataset(ds);
    return result;
}

}  // namespace

std::size_t FittedPreprocess::output_dim() const {
    std::size_t dim = 0;
    for (const Column& col : columns) {
        dim += (col.kind == ColumnKind::one_hot) ? col.vocabulary.size() : 1;
    }
    return dim;
}

std::vector<std::string> FittedPreprocess::output_names() const {
    std::vector<std::string> names;
    for (const Column& col : columns) {
        if (col.kind == ColumnKind::one_hot) {
            for (const std::string& v : col.vocabulary) {
                names.push_back(col.name + "=" + v);
            }
        } else {
            names.push_back(col.name);
        }
    }
    return names;
}

std::string FittedPreprocess::serialize() const {
    std::ostringstream out;
    for (const Column& col : columns) {
        out << col.name << '|';
        switch (col.kind) {
            case ColumnKind::one_hot:
                out << "one-hot";
                for (const std::string& v : col.vocabulary) {
                    out << '|' << v;
                }
                break;
            case ColumnKind::standardize:
                out << "standardize|" << format_double(col.mean) << '|'
                    << format_double(col.stddev);
                break;
            case ColumnKind::min_max:
                out << "min-max|" << format_double(col.lo) << '|' << format_double(col.hi);
                break;
            case ColumnKind::passthrough:
                out << "passthrough";
                break;
        }
        out << '\n';
    }
    out << "labels";
    for (const std::string& v : label_values) {
        out << '|' << v;
    }
    out << '\n';
    return out.str();
}

LoadResult load_csv(const std::string& path, const PreprocessSpec& spec,
                    const std::string& label_column) {
    RawTable table = read_table(path);
    auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
    if (label_it == table.header.end()) {
        throw IngestionError("label column '" + label_column + "' not found");
    }
    std::size_t label_col = static_cast<std::size_t>(label_it - table.header.begin());

    for (const auto& [name, kind] : spec.overrides) {
        (void)kind;
        if (std::find(table.header.begin(), table.header.end(), name) ==
            table.header.end()) {
            throw IngestionError("preprocess directive names unknown column '" + name + "'");
        }
    }

    FittedPreprocess fitted;
    fitted.unknown_policy = spec.unknown_policy;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == label_col) {
            continue;
        }
        FittedPreprocess::Column col;
        col.name = table.header[c];
        auto it = spec.overrides.find(col.name);
        col.kind = (it != spec.overrides.end()) ? it->second : spec.default_kind;
        long col_no = static_cast<long>(c) + 1;
        switch (col.kind) {
            case ColumnKind::one_hot: {
                std::set<std::string> vocab;
                for (const auto& row : table.rows) {
                    vocab.insert(row[c]);
                }
                col.vocabulary.assign(vocab.begin(), vocab.end());
                break;
            }
            case ColumnKind::standardize: {
                double sum = 0.0;
                for (std::size_t r = 0; r < table.rows.size(); ++r) {
                    sum += parse_double(table.rows[r][c], static_cast<long>(r) + 2, col_no);
                }
                double n = static_cast<double>(table.rows.size());
                col.mean = sum / n;
                double ss = 0.0;
                for (std::size_t r = 0; r < table.rows.size(); ++r) {
                    double v = parse_double(table.rows[r][c], static_cast<long>(r) + 2, col_no);
                    ss += (v - col.mean) * (v - col.mean);
                }
                double var = ss / n;
                col.stddev = (var > 0.0) ? std::sqrt(var) : 1.0;
                break;
            }
            case ColumnKind::min_max: {
                col.lo = parse_double(table.rows[0][c], 2, col_no);
                col.hi = col.lo;
                for (std::size_t r = 1; r < table.rows.size(); ++r) {
                    double v = parse_double(table.rows[r][c], static_cast<long>(r) + 2, col_no);
                    col.lo = std::min(col.lo, v);
                    col.hi = std::max(col.hi, v);
                }
                break;
            }
            case ColumnKind::passthrough:
                break;
        }
        fitted.columns.push_back(std::move(col));
    }
    fitted.label_values = fit_label_values(table, label_col);
    if (fitted.label_values.size() < 2) {
        throw IngestionError("label column has a single distinct value");
    }
    return assemble(table, fitted, label_col);
}

LoadResult load_csv_fitted(const std::string& path, const FittedPreprocess& fitted,
                           const std::string& label_column) {
    RawTable table = read_table(path);
    auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
    if (label_it == table.header.end()) {
        throw IngestionError("label column '" + label_column + "' not found");
    }
    std::size_t label_col = static_cast<std::size_t>(label_it - table.header.begin());
    std::size_t expected = fitted.columns.size() + 1;
    if (table.header.size() != expected) {
        throw IngestionError("header has " + std::to_string(table.header.size()) +
                             " columns, fitted statistics expect " + std::to_string(expected));
    }
    std::size_t in = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == label_col) {
            continue;
        }
        if (table.header[c] != fitted.columns[in].name) {
            throw IngestionError("column '" + table.header[c] +
                                 "' does not match fitted column '" +
                                 fitted.columns[in].name + "'");
        }
        ++in;
    }
    return assemble(table, fitted, label_col);
}

}  // namespace looaudit
