#pragma once

#include <cstdint>

namespace au2vec {

inline constexpr const char* kVersion = "0.1.0";

/// Every binary store (AUFC, AUKM, AUVB, AUTK, AUCO, AUGV) is at this version.
inline constexpr std::uint32_t kFormatVersion = 1;

}  // namespace au2vec
