#pragma once

namespace impact {

inline constexpr const char* kVersion = "0.1.0";

}
