#pragma once

namespace flowlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowlab
