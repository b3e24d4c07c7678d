#pragma once

namespace magstep {
inline constexpr const char* version = "0.1.0";
}
