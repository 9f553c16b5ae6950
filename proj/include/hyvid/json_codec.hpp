#pragma once

// JSON encoding of the domain types. Encoders build nlohmann::json values;
// `canonical()` turns them into the deterministic byte form (sorted keys, no
// whitespace, UTF-8). Decoders are strict: unknown keys, wrong types and
// missing fields raise Error(kValidationFailed) with the offending path.

#include <string>
#include <string_view>

#include "json.hpp"

#include "hyvid/collab.hpp"
#include "hyvid/model.hpp"
#include "hyvid/revision.hpp"

namespace hyvid {

using Json = nlohmann::json;

inline constexpr std::string_view kSetFormat = "hyvid-annotations";
inline constexpr std::string_view kLogFormat = "hyvid-revlog";
inline constexpr int kFormatVersion = 1;

/// Compact JSON with lexicographically sorted keys.
std::string canonical(const Json& j);

/// Like canonical(), but an object's `format` and `version` keys come first.
std::string canonical_envelope(const Json& j);

/// Parses text as JSON, mapping syntax errors to Error(kInvalidJson).
Json parse_json(std::string_view text);

Json encode(const TimeFragment& f);
Json encode(const SpatialRegion& r);
Json encode(const Body& b);
Json encode(const Annotation& a);
Json encode(const VideoReference& v);
Json encode(const Resource& r);
Json encode(const RevisionEntry& e);
Json encode(const RevisionLog& log);
Json encode(const AnnotationRef& ref);
Json encode(const DiffReport& report);
Json encode(const MergeResult& result);
Json encode(const GradeReport& report);
Json encode(const MergePolicy& policy);
Json encode(std::span<const Annotation> annotations);

/// `{"annotations":[...],"at":n,"set_id":...}`: the set as of revision `at`.
Json encode_replay(const RevisionLog& log, std::int64_t at);

TimeFragment decode_fragment(const Json& j, const std::string& path);
SpatialRegion decode_region(const Json& j, const std::string& path);
Body decode_body(const Json& j, const std::string& path);
Annotation decode_annotation(const Json& j, const std::string& path);
VideoReference decode_video(const Json& j, const std::string& path);
Resource decode_resource(const Json& j, const std::string& path);
RevisionEntry decode_revision_entry(const Json& j, const std::string& path);
RevisionLog decode_revision_log(const Json& j);
AnnotationRef decode_annotation_ref(const Json& j, const std::string& path);
MergePolicy decode_merge_policy(const Json& j, const std::string& path);

/// Small accessor used by decoders: checks the value is an object whose keys
/// are all in `allowed`, then hands out typed fields with path-bearing errors.
class JsonFields {
 public:
  JsonFields(const Json& j, std::string path, std::initializer_list<std::string_view> allowed);

  const Json& required(std::string_view key) const;
  const Json* optional(std::string_view key) const;

  std::string string(std::string_view key) const;
  std::optional<std::string> optional_string(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;
  std::optional<std::int64_t> optional_integer(std::string_view key) const;
  std::vector<std::string> strings(std::string_view key) const;

  std::string path(std::string_view key) const;

 private:
  const Json& j_;
  std::string path_;
};

}  // namespace hyvid
