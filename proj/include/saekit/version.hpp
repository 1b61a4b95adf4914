#pragma once

namespace saekit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace saekit
