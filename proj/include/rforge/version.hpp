#pragma once

namespace rforge {
inline constexpr const char* kVersion = "0.1.0";
}
