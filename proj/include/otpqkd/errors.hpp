#ifndef OTPQKD_ERRORS_HPP
#define OTPQKD_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace otpqkd {

enum class ErrorCode {
  NotNormalized,
  NegativeWeight,
  ZeroTotal,
  OutOfRange,
  Inconsistent,
  DegenerateChannel,
  DimensionMismatch,
  NoSolution,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Inconsistent: return "Inconsistent";
    case ErrorCode::DegenerateChannel: return "DegenerateChannel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace otpqkd

#endif
