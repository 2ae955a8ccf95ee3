#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ppgtok {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::uint32_t kLabelFormatVersion = 1;
inline constexpr int kCodebookFormatVersion = 1;

// Invalid parameters or an invalid request (CLI maps this to exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, corrupt or mutually inconsistent files (CLI exit 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical failure: diverged training, failed gradient check (CLI exit 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppgtok
