#pragma once

namespace zmfit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace zmfit
