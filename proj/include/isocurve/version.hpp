#pragma once

namespace isocurve {

inline constexpr const char* kToolName = "isocurve";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace isocurve
