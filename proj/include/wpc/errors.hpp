#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wpc {

// Error taxonomy shared by the library and the CLI. `code()` is a stable,
// machine-readable identifier (see README for the full list); what() carries
// the human-readable diagnostic.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

namespace errc {
inline constexpr const char* invalid_argument = "invalid_argument";
inline constexpr const char* shape_mismatch = "shape_mismatch";
inline constexpr const char* non_finite = "non_finite";
inline constexpr const char* io_error = "io_error";
inline constexpr const char* format_error = "format_error";
inline constexpr const char* config_error = "config_error";
inline constexpr const char* usage_error = "usage_error";
}  // namespace errc

}  // namespace wpc
