#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace opbw {

// Spatial dimensions beyond this are rejected at config validation; 3^4 = 81
// neighbours is already far outside desk scale.
inline constexpr int kMaxDim = 4;

using Coord = std::array<std::int32_t, kMaxDim>;

/// A space-time point (x, n). Coordinates beyond the configured dimension are
/// kept at zero so that Coord equality and hashing stay dimension-agnostic.
struct Site {
  Coord x{};
  std::int32_t n = 0;

  friend bool operator==(const Site&, const Site&) = default;
};

inline Coord operator+(Coord a, const Coord& b) {
  for (int i = 0; i < kMaxDim; ++i) a[i] += b[i];
  return a;
}

inline Coord operator-(Coord a, const Coord& b) {
  for (int i = 0; i < kMaxDim; ++i) a[i] -= b[i];
  return a;
}

inline std::int32_t sup_norm(const Coord& c) {
  std::int32_t m = 0;
  for (auto v : c) m = std::max(m, v < 0 ? -v : v);
  return m;
}

std::string to_string(const Coord& c, int d);
std::string to_string(const Site& s, int d);

// Error hierarchy. Every failure the library reports is one of these; the CLI
// maps them onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct QueryError : Error {
  using Error::Error;
};
struct ResourceError : Error {
  using Error::Error;
};
struct StatisticalError : Error {
  using Error::Error;
};
struct InvariantViolation : Error {
  using Error::Error;
};

}  // namespace opbw
