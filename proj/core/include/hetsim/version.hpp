#pragma once

namespace hetsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hetsim
