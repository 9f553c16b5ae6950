#include "hyvid/model.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <set>
#include <unordered_set>

namespace hyvid {

std::string_view to_string(RegionUnit unit) {
  return unit == RegionUnit::kPixel ? "pixel" : "percent";
}

std::optional<RegionUnit> region_unit_from_string(std::string_view s) {
  if (s == "pixel") return RegionUnit::kPixel;
  if (s == "percent") return RegionUnit::kPercent;
  return std::nullopt;
}

std::string_view body_kind(const Body& body) {
  switch (body.index()) {
    case 0: return "comment";
    case 1: return "resource";
    default: return "overlay";
  }
}

std::string body_text(const Body& body) {
  if (const auto* c = std::get_if<Comment>(&body)) return c->text;
  if (const auto* o = std::get_if<Overlay>(&body)) return o->text;
  const auto& link = std::get<ResourceLink>(body);
  return link.note ? link.resource_id + ": " + *link.note : link.resource_id;
}

std::string_view to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::kImage: return "image";
    case ResourceKind::kText: return "text";
    case ResourceKind::kAudio: return "audio";
    case ResourceKind::kVideo: return "video";
    case ResourceKind::kWeb: return "web";
  }
  return "web";
}

std::optional<ResourceKind> resource_kind_from_string(std::string_view s) {
  if (s == "image") return ResourceKind::kImage;
  if (s == "text") return ResourceKind::kText;
  if (s == "audio") return ResourceKind::kAudio;
  if (s == "video") return ResourceKind::kVideo;
  if (s == "web") return ResourceKind::kWeb;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Timestamp

std::string Timestamp::to_string() const {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{epoch_ms}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()),
                int(hms.subseconds().count()));
  return buf;
}

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

Timestamp Timestamp::parse(std::string_view s) {
  using namespace std::chrono;
  auto fail = [&]() -> Error {
    return Error(ErrorCode::kValidationFailed,
                 "invalid RFC 3339 UTC timestamp '" + std::string(s) + "'");
  };
  int y, mo, d, h, mi, se;
  if (!read_digits(s, 0, 4, y) || s.size() < 20 || s[4] != '-' || !read_digits(s, 5, 2, mo) ||
      s[7] != '-' || !read_digits(s, 8, 2, d) || s[10] != 'T' || !read_digits(s, 11, 2, h) ||
      s[13] != ':' || !read_digits(s, 14, 2, mi) || s[16] != ':' || !read_digits(s, 17, 2, se)) {
    throw fail();
  }
  std::size_t pos = 19;
  int ms = 0;
  if (s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    int scale = 100;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (scale > 0) {
        ms += (s[pos] - '0') * scale;
        scale /= 10;
      }
      ++pos;
    }
    if (pos == start) throw fail();
  }
  if (pos + 1 != s.size() || s[pos] != 'Z') throw fail();
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) throw fail();
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{se} + milliseconds{ms};
  return Timestamp{duration_cast<milliseconds>(tp.time_since_epoch()).count()};
}

Timestamp Timestamp::now() {
  using namespace std::chrono;
  return Timestamp{
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

// ---------------------------------------------------------------------------
// Validation

bool is_valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

bool is_absolute_uri(std::string_view uri) {
  const auto colon = uri.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == uri.size()) return false;
  if (!std::isalpha(static_cast<unsigned char>(uri[0]))) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    const char c = uri[i];
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') {
      return false;
    }
  }
  return std::none_of(uri.begin(), uri.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || std::iscntrl(static_cast<unsigned char>(c));
  });
}

std::vector<std::string> normalize_tags(std::span<const std::string> tags) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (std::string tag : tags) {
    std::transform(tag.begin(), tag.end(), tag.begin(), [](char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
    if (tag.empty() || !seen.insert(tag).second) continue;
    out.push_back(std::move(tag));
  }
  return out;
}

std::vector<Violation> validate_fragment(const TimeFragment& f, Millis duration_ms) {
  std::vector<Violation> out;
  if (f.begin_ms < 0) out.push_back({"", "begin<0"});
  if (f.end_ms < 0) out.push_back({"", "end<0"});
  if (f.begin_ms > f.end_ms) out.push_back({"", "begin>end"});
  if (f.end_ms > duration_ms) out.push_back({"", "end>duration"});
  return out;
}

std::vector<Violation> validate_region(const SpatialRegion& r) {
  std::vector<Violation> out;
  if (r.x < 0 || r.y < 0) out.push_back({"", "negative origin"});
  if (r.w <= 0 || r.h <= 0) out.push_back({"", "empty region"});
  if (r.unit == RegionUnit::kPercent) {
    constexpr std::int64_t kFull = 100 * SpatialRegion::kPercentScale;
    if (r.x + r.w > kFull || r.y + r.h > kFull) out.push_back({"", "region exceeds 100%"});
  }
  return out;
}

namespace {

void append_prefixed(std::vector<Violation>& out, std::vector<Violation> found,
                     const std::string& prefix) {
  for (auto& v : found) {
    v.path = v.path.empty() ? prefix : prefix + "." + v.path;
    out.push_back(std::move(v));
  }
}

}  // namespace

std::vector<Violation> validate_video(const VideoReference& video) {
  std::vector<Violation> out;
  if (!is_valid_id(video.id)) out.push_back({"id", "invalid id"});
  if (!is_absolute_uri(video.uri)) out.push_back({"uri", "not an absolute URI"});
  if (video.duration_ms <= 0) out.push_back({"duration_ms", "duration must be > 0"});
  return out;
}

std::vector<Violation> validate_resource(const Resource& resource) {
  std::vector<Violation> out;
  if (!is_valid_id(resource.id)) out.push_back({"id", "invalid id"});
  if (resource.title.empty()) out.push_back({"title", "empty title"});
  if (!is_absolute_uri(resource.url)) out.push_back({"url", "not an absolute URI"});
  return out;
}

std::vector<Violation> validate_set(const AnnotationSet& set, const VideoReference& video,
                                    std::optional<std::span<const Resource>> catalog) {
  std::vector<Violation> out;
  if (!is_valid_id(set.id)) out.push_back({"id", "invalid id"});
  if (set.owner.empty()) out.push_back({"owner", "empty owner"});
  if (set.video_id != video.id) out.push_back({"video", "set references another video"});
  if (set.revision < 0) out.push_back({"revision", "negative revision"});
  append_prefixed(out, validate_video(video), "video");

  std::set<std::string_view> known;
  if (catalog) {
    for (const auto& r : *catalog) known.insert(r.id);
  }

  std::unordered_set<std::string_view> ids;
  for (std::size_t i = 0; i < set.annotations.size(); ++i) {
    const auto& a = set.annotations[i];
    const std::string at = "annotations[" + std::to_string(i) + "]";
    if (!is_valid_id(a.id)) out.push_back({at + ".id", "invalid id"});
    if (!ids.insert(a.id).second) out.push_back({at + ".id", "duplicate id " + a.id});
    if (a.author.empty()) out.push_back({at + ".author", "empty author"});
    if (a.created > a.modified) out.push_back({at + ".modified", "modified before created"});
    append_prefixed(out, validate_fragment(a.fragment, video.duration_ms), at + ".fragment");
    if (const auto* c = std::get_if<Comment>(&a.body)) {
      if (c->text.empty()) out.push_back({at + ".body.text", "empty text"});
    } else if (const auto* o = std::get_if<Overlay>(&a.body)) {
      if (o->text.empty()) out.push_back({at + ".body.text", "empty text"});
      append_prefixed(out, validate_region(o->region), at + ".body.region");
    } else {
      const auto& link = std::get<ResourceLink>(a.body);
      if (!is_valid_id(link.resource_id)) {
        out.push_back({at + ".body.resource_id", "invalid id"});
      } else if (catalog && !known.contains(link.resource_id)) {
        out.push_back({at + ".body.resource_id", "unknown resource " + link.resource_id});
      }
    }
    if (normalize_tags(a.tags) != a.tags) {
      out.push_back({at + ".tags", "tags not normalized (lowercase, distinct, non-empty)"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interval algebra

Millis overlap_ms(const TimeFragment& a, const TimeFragment& b) {
  return std::max<Millis>(0, std::min(a.end_ms, b.end_ms) - std::max(a.begin_ms, b.begin_ms));
}

double jaccard(const TimeFragment& a, const TimeFragment& b) {
  const Millis inter = overlap_ms(a, b);
  const Millis union_len = a.length() + b.length() - inter;
  if (union_len == 0) return a == b ? 1.0 : 0.0;
  return static_cast<double>(inter) / static_cast<double>(union_len);
}

bool timeline_less(const Annotation& a, const Annotation& b) {
  if (a.fragment.begin_ms != b.fragment.begin_ms) return a.fragment.begin_ms < b.fragment.begin_ms;
  if (a.fragment.end_ms != b.fragment.end_ms) return a.fragment.end_ms < b.fragment.end_ms;
  return a.id < b.id;
}

std::vector<Annotation> sort_timeline(std::span<const Annotation> annotations) {
  std::vector<Annotation> out(annotations.begin(), annotations.end());
  std::stable_sort(out.begin(), out.end(), timeline_less);
  return out;
}

std::vector<Annotation> annotations_at(const AnnotationSet& set, Millis t_ms) {
  std::vector<Annotation> out;
  for (const auto& a : set.annotations) {
    if (a.fragment.begin_ms <= t_ms && t_ms <= a.fragment.end_ms) out.push_back(a);
  }
  std::stable_sort(out.begin(), out.end(), timeline_less);
  return out;
}

}  // namespace hyvid
