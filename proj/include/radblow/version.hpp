#pragma once

namespace radblow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace radblow
