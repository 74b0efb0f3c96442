#include "looaudit/cache.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "looaudit/errors.hpp"
#include "looaudit/hash.hpp"
#include "looaudit/model_io.hpp"

namespace fs = std::filesystem;

namespace looaudit {

std::uint64_t rule_hash(const LearningRule& rule) { return fnv1a(rule.canonical()); }

std::uint64_t view_hash(const DatasetView& view) {
    std::uint64_t h = fnv1a("view", 4);
    const Dataset& ds = *view.dataset;
    std::uint64_t header[3] = {static_cast<std::uint64_t>(view.size()),
                               static_cast<std::uint64_t>(ds.features.cols()),
                               static_cast<std::uint64_t>(ds.num_classes)};
    h = fnv1a(header, sizeof(header), h);
    for (std::size_t row : view.rows) {
        std::uint64_t id = static_cast<std::uint64_t>(ds.point_ids[row]);
        std::uint64_t label = static_cast<std::uint64_t>(ds.labels[row]);
        h = fnv1a(&id, sizeof(id), h);
        h = fnv1a(&label, sizeof(label), h);
        h = fnv1a(ds.features.row_ptr(row), ds.features.cols() * sizeof(double), h);
    }
    return h;
}

ModelCache::ModelCache(std::string directory) : directory_(std::move(directory)) {
    if (directory_.empty()) throw ConfigError("cache directory must not be empty");
    fs::create_directories(directory_);
}

std::string ModelCache::key_stem(const LearningRule& rule, const DatasetView& view) const {
    std::ostringstream stem;
    stem << hex64(rule_hash(rule)) << "-" << hex64(view_hash(view)) << "-" << hex64(rule.seed);
    return (fs::path(directory_) / stem.str()).string();
}

std::optional<Model> ModelCache::load(const LearningRule& rule, const DatasetView& view) const {
    std::string stem = key_stem(rule, view);
    std::ifstream meta(stem + ".meta");
    if (!meta) return std::nullopt;
    std::string rule_hex, view_hex, digest_hex;
    if (!(meta >> rule_hex >> view_hex >> digest_hex)) return std::nullopt;
    if (rule_hex != hex64(rule_hash(rule)) || view_hex != hex64(view_hash(view)))
        return std::nullopt;

    std::vector<std::uint8_t> bytes;
    try {
        std::ifstream in(stem + ".model", std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buffer;
        buffer << in.rdbuf();
        const std::string& blob = buffer.str();
        bytes.assign(blob.begin(), blob.end());
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (hex64(fnv1a(bytes.data(), bytes.size())) != digest_hex) return std::nullopt;
    try {
        return deserialize_model(bytes);
    } catch (const Error&) {
        return std::nullopt;  // corrupt entry reads as a miss
    }
}

void ModelCache::store(const LearningRule& rule, const DatasetView& view,
                       const Model& model) const {
    std::string stem = key_stem(rule, view);
    std::vector<std::uint8_t> bytes = serialize_model(model);

    std::string model_tmp = stem + ".model.tmp";
    write_model_file(model_tmp, model);
    fs::rename(model_tmp, stem + ".model");

    std::ostringstream meta;
    meta << hex64(rule_hash(rule)) << " " << hex64(view_hash(view)) << " "
         << hex64(fnv1a(bytes.data(), bytes.size())) << "\n";
    std::string meta_tmp = stem + ".meta.tmp";
    std::ofstream out(meta_tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write cache entry " + meta_tmp);
    out << meta.str();
    out.close();
    if (!out) throw ArgumentError("cannot write cache entry " + meta_tmp);
    fs::rename(meta_tmp, stem + ".meta");
}

}  // namespace looaudit
