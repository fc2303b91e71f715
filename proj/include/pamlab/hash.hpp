#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace pamlab {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

inline std::uint64_t fnv1a(std::span<const double> v) {
  return fnv1a(v.data(), v.size() * sizeof(double));
}

}  // namespace pamlab
