#pragma once

namespace phyto {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace phyto
