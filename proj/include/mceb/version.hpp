#pragma once

namespace mceb {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mceb
