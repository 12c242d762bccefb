#pragma once

namespace bayesosc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bayesosc
