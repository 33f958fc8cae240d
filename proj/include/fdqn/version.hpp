#pragma once

namespace fdqn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fdqn
