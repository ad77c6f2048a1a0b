#pragma once

namespace dwnn {

inline constexpr const char* version = "1.0.0";

}  // namespace dwnn
