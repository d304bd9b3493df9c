#pragma once

namespace ce {
inline constexpr const char* kVersion = "0.1.0";
}
