#pragma once

namespace ccmvn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ccmvn
