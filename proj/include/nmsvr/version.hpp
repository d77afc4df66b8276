#pragma once

namespace nmsvr {
inline constexpr const char* kVersion = "0.1.0";
}
