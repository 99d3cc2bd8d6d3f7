#pragma once

#include <Eigen/Core>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace svo {

inline constexpr const char* kToolkitVersion = "0.3.0";

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Base class for every error the toolkit reports.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a caller breaks an API contract (e.g. stepping a finished episode).
class ContractViolation : public Error {
public:
  using Error::Error;
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// Shortest text that parses back to the same double ("nan", "inf" for
/// non-finite values). Locale independent.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
  return out;
}

}  // namespace svo
