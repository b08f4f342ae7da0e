#pragma once

namespace nnas {

inline constexpr const char* kVersionString = "nnsubspace 0.1.0";

} // namespace nnas
