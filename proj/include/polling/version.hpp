#pragma once

namespace polling {

inline constexpr const char* kToolName = "polling";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace polling
