#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hyvid {

/// Machine-readable failure categories. The string forms are the `code`
/// values returned by the HTTP API and are part of the public contract.
enum class ErrorCode {
  kInvalidRequest,
  kInvalidJson,
  kValidationFailed,
  kInvalidFragment,
  kUnsupportedFormat,
  kUnsupportedVersion,
  kVideoMismatch,
  kUnknownTarget,
  kDuplicateId,
  kReplayMismatch,
  kUnauthorized,
  kForbiddenRole,
  kNotFound,
  kRevisionConflict,
  kPayloadTooLarge,
  kReadOnly,
  kIo,
  kInternal,
};

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);

/// One failed clause of a validation, addressed by a field path such as
/// `annotations[3].fragment`.
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string describe(const std::vector<Violation>& violations);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string path = {});
  Error(ErrorCode code, std::vector<Violation> violations);

  ErrorCode code() const noexcept { return code_; }
  /// what() without the leading path.
  const std::string& message() const noexcept { return message_; }
  const std::string& path() const noexcept { return path_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string path_;
  std::vector<Violation> violations_;
};

}  // namespace hyvid
