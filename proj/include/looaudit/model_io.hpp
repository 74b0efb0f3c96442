#pragma once

#include <string>
#include <vector>

#include "looaudit/rules.hpp"

namespace looaudit {

// Flat little-endian binary model format: magic "LOOA", u32 version, u8 kind
// tag, then kind-specific payload (dims then 64-bit float data).
std::vector<unsigned char> serialize_model(const Model& model);
Model deserialize_model(const std::vector<unsigned char>& bytes);

void write_model_file(const std::string& path, const Model& model);
Model read_model_file(const std::string& path);

// FNV-1a digest of the serialized form; stable identity for manifests and
// cache integrity checks.
std::uint64_t model_digest(const Model& model);

}  // namespace looaudit
