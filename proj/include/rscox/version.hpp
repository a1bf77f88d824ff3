#pragma once

namespace rscox {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rscox
