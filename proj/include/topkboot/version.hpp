#pragma once

namespace topkboot {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace topkboot
