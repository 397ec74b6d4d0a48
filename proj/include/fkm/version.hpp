#pragma once

namespace fkm {

inline constexpr const char* kToolName = "fkm";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fkm
