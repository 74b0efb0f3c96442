#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "looaudit/dataset.hpp"
#include "looaudit/rules.hpp"

namespace looaudit {

// Hash of everything a deterministic training run depends on: the canonical
// rule text and the exact (ids, labels, features) content of the view.
std::uint64_t rule_hash(const LearningRule& rule);
std::uint64_t view_hash(const DatasetView& view);

// Disk cache of trained models keyed by (rule, view, seed). Entries are a
// .model blob plus a .meta record carrying the key and the model digest;
// stores are atomic (tmp + rename) and any mismatch or corruption reads as a
// miss, never as a wrong model.
class ModelCache {
   public:
    explicit ModelCache(std::string directory);

    std::optional<Model> load(const LearningRule& rule, const DatasetView& view) const;
    void store(const LearningRule& rule, const DatasetView& view, const Model& model) const;

    const std::string& directory() const { return directory_; }

   private:
    std::string key_stem(const LearningRule& rule, const DatasetView& view) const;
    std::string directory_;
};

}  // namespace looaudit
