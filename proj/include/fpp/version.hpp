#pragma once

namespace fpp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fpp
