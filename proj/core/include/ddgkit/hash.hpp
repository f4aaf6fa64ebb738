#pragma once

#include <cstdint>
#include <string_view>

namespace ddgkit {

// FNV-1a, 64-bit. Stable across platforms; used for run directory names
// and for deriving per-record stream seeds from record identity.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ddgkit
