#pragma once

namespace looaudit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace looaudit
