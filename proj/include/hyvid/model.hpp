#pragma once

// Domain model for annotated video: fragments, annotation bodies, sets and
// the interval algebra used by the timeline and the alignment code.
//
// Every type here is a plain value and every function is pure.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hyvid/error.hpp"

namespace hyvid {

using Millis = std::int64_t;

/// Closed interval [begin_ms, end_ms] of media time. A point fragment has
/// begin_ms == end_ms.
struct TimeFragment {
  Millis begin_ms = 0;
  Millis end_ms = 0;

  bool is_point() const noexcept { return begin_ms == end_ms; }
  Millis length() const noexcept { return end_ms - begin_ms; }

  auto operator<=>(const TimeFragment&) const = default;
};

enum class RegionUnit { kPixel, kPercent };

std::string_view to_string(RegionUnit unit);
std::optional<RegionUnit> region_unit_from_string(std::string_view s);

/// Rectangle over the video frame. Coordinates are fixed-point: whole pixels
/// for kPixel, hundredths of a percent for kPercent (so 12.5% is 1250).
struct SpatialRegion {
  RegionUnit unit = RegionUnit::kPixel;
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  static constexpr std::int64_t kPercentScale = 100;

  bool operator==(const SpatialRegion&) const = default;
};

struct Comment {
  std::string text;
  bool operator==(const Comment&) const = default;
};

struct ResourceLink {
  std::string resource_id;
  std::optional<std::string> note;
  bool operator==(const ResourceLink&) const = default;
};

struct Overlay {
  std::string text;
  SpatialRegion region;
  bool operator==(const Overlay&) const = default;
};

using Body = std::variant<Comment, ResourceLink, Overlay>;

/// "comment", "resource" or "overlay".
std::string_view body_kind(const Body& body);

/// Single-line human text for a body: the comment or overlay text, or the
/// resource id followed by ": note" when a note is present.
std::string body_text(const Body& body);

/// UTC instant with millisecond resolution, exchanged as RFC 3339 with 'Z'.
struct Timestamp {
  std::int64_t epoch_ms = 0;

  auto operator<=>(const Timestamp&) const = default;

  /// Canonical form `YYYY-MM-DDTHH:MM:SS.mmmZ`.
  std::string to_string() const;
  /// Accepts `YYYY-MM-DDTHH:MM:SS[.f+]Z`; fractional digits past the
  /// millisecond are truncated. Throws Error on anything else.
  static Timestamp parse(std::string_view s);
  static Timestamp now();
};

struct Annotation {
  std::string id;
  std::string author;
  Timestamp created;
  Timestamp modified;
  TimeFragment fragment;
  Body body;
  std::vector<std::string> tags;

  bool operator==(const Annotation&) const = default;
};

enum class ResourceKind { kImage, kText, kAudio, kVideo, kWeb };

std::string_view to_string(ResourceKind kind);
std::optional<ResourceKind> resource_kind_from_string(std::string_view s);

struct Resource {
  std::string id;
  std::string title;
  ResourceKind kind = ResourceKind::kWeb;
  std::string url;
  std::optional<std::string> description;

  bool operator==(const Resource&) const = default;
};

struct VideoReference {
  std::string id;
  std::string uri;
  Millis duration_ms = 0;
  std::string title;

  bool operator==(const VideoReference&) const = default;
};

struct AnnotationSet {
  std::string id;
  std::string video_id;
  std::string owner;
  std::vector<Annotation> annotations;
  std::int64_t revision = 0;

  bool operator==(const AnnotationSet&) const = default;
};

// ---------------------------------------------------------------------------
// Validation helpers

/// Identifiers appear in file names and URL paths: 1..128 characters from
/// [A-Za-z0-9._-], not starting with '.'.
bool is_valid_id(std::string_view id);

/// `scheme:rest` with an RFC 3986 scheme and a non-empty remainder.
bool is_absolute_uri(std::string_view uri);

/// ASCII-lowercases, drops empty entries and duplicates, keeps first
/// occurrence order.
std::vector<std::string> normalize_tags(std::span<const std::string> tags);

/// Empty result means the fragment is valid. Clause names: "begin<0",
/// "end<0", "begin>end", "end>duration".
std::vector<Violation> validate_fragment(const TimeFragment& f, Millis duration_ms);

std::vector<Violation> validate_region(const SpatialRegion& r);

std::vector<Violation> validate_video(const VideoReference& video);
std::vector<Violation> validate_resource(const Resource& resource);

/// Checks a set against its video. When `catalog` is given, every
/// ResourceLink must name a resource in it.
std::vector<Violation> validate_set(const AnnotationSet& set, const VideoReference& video,
                                    std::optional<std::span<const Resource>> catalog = std::nullopt);

// ---------------------------------------------------------------------------
// Interval algebra and timeline

/// max(0, min(a.end, b.end) - max(a.begin, b.begin)).
Millis overlap_ms(const TimeFragment& a, const TimeFragment& b);

/// Overlap over union length; two zero-length fragments score 1 when equal
/// and 0 otherwise.
double jaccard(const TimeFragment& a, const TimeFragment& b);

/// Strict weak order by (begin_ms, end_ms, id).
bool timeline_less(const Annotation& a, const Annotation& b);

std::vector<Annotation> sort_timeline(std::span<const Annotation> annotations);
inline std::vector<Annotation> sort_timeline(const AnnotationSet& set) {
  return sort_timeline(set.annotations);
}

/// Annotations whose closed interval contains t_ms, in timeline order.
std::vector<Annotation> annotations_at(const AnnotationSet& set, Millis t_ms);

}  // namespace hyvid
