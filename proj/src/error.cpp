#include "hyvid/error.hpp"

namespace hyvid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidRequest: return "invalid_request";
    case ErrorCode::kInvalidJson: return "invalid_json";
    case ErrorCode::kValidationFailed: return "validation_failed";
    case ErrorCode::kInvalidFragment: return "invalid_fragment";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kVideoMismatch: return "video_mismatch";
    case ErrorCode::kUnknownTarget: return "unknown_target";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kReplayMismatch: return "replay_mismatch";
    case ErrorCode::kUnauthorized: return "unauthorized";
    case ErrorCode::kForbiddenRole: return "forbidden_role";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kRevisionConflict: return "revision_conflict";
    case ErrorCode::kPayloadTooLarge: return "payload_too_large";
    case ErrorCode::kReadOnly: return "read_only";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kForbiddenRole: return 403;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kRevisionConflict:
    case ErrorCode::kDuplicateId: return 409;
    case ErrorCode::kPayloadTooLarge: return 413;
    case ErrorCode::kReadOnly: return 503;
    case ErrorCode::kIo:
    case ErrorCode::kInternal: return 500;
    default: return 400;
  }
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    if (!v.path.empty()) out += v.path + ": ";
    out += v.message;
  }
  return out;
}

Error::Error(ErrorCode code, std::string message, std::string path)
    : std::runtime_error(path.empty() ? message : path + ": " + message),
      code_(code),
      message_(std::move(message)),
      path_(std::move(path)) {}

Error::Error(ErrorCode code, std::vector<Violation> violations)
    : std::runtime_error(describe(violations)),
      code_(code),
      message_(describe(violations)),
      path_(violations.empty() ? std::string{} : violations.front().path),
      violations_(std::move(violations)) {}

}  // namespace hyvid
