#include "hyvid/interchange.hpp"

#include <algorithm>
#include <cstdio>

#include "hyvid/json_codec.hpp"

namespace hyvid {
namespace {

void require_valid(const AnnotationSet& set, const VideoReference& video) {
  if (auto violations = validate_set(set, video); !violations.empty()) {
    throw Error(ErrorCode::kValidationFailed, std::move(violations));
  }
}

// Cue payloads may not contain blank lines or "-->", and '&' / '<' start
// markup, so text is escaped and empty lines are dropped.
std::string vtt_cue_text(const std::string& text) {
  std::string out;
  bool line_empty = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      c = '\n';
    }
    if (c == '\n') {
      if (!line_empty) out += '\n';
      line_empty = true;
      continue;
    }
    line_empty = false;
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string export_set_json(const AnnotationSet& set, const VideoReference& video) {
  require_valid(set, video);
  const auto sorted = sort_timeline(set);
  Json doc = {{"format", kSetFormat},
              {"version", kFormatVersion},
              {"id", set.id},
              {"owner", set.owner},
              {"revision", set.revision},
              {"video", encode(video)},
              {"annotations", encode(sorted)}};
  return canonical_envelope(doc);
}

ImportedSet decode_set_document(const Json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidationFailed, "expected a JSON object", "");
  }
  const auto format = doc.find("format");
  if (format == doc.end() || !format->is_string() || format->get<std::string>() != kSetFormat) {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown format tag", "format");
  }
  const auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer()) {
    throw Error(ErrorCode::kUnsupportedVersion, "missing or non-integer version", "version");
  }
  if (version->get<std::int64_t>() != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported version " + version->dump(), "version");
  }

  const JsonFields f(doc, "",
                     {"format", "version", "id", "owner", "revision", "video", "annotations"});
  ImportedSet out;
  out.video = decode_video(f.required("video"), "video");
  out.set.id = f.string("id");
  out.set.owner = f.string("owner");
  out.set.revision = f.integer("revision");
  out.set.video_id = out.video.id;
  const auto& anns = f.required("annotations");
  if (!anns.is_array()) throw Error(ErrorCode::kValidationFailed, "expected array", "annotations");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    out.set.annotations.push_back(
        decode_annotation(anns[i], "annotations[" + std::to_string(i) + "]"));
  }
  require_valid(out.set, out.video);

  out.reordered = !std::is_sorted(out.set.annotations.begin(), out.set.annotations.end(),
                                  timeline_less);
  if (out.reordered) out.set.annotations = sort_timeline(out.set);
  return out;
}

ImportedSet import_set_json(std::string_view bytes) { return decode_set_document(parse_json(bytes)); }

std::string pretty_json(std::string_view canonical_bytes) {
  return parse_json(canonical_bytes).dump(2) + "\n";
}

std::string format_vtt_time(Millis t_ms) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld",
                static_cast<long long>(t_ms / 3'600'000), static_cast<long long>(t_ms / 60'000 % 60),
                static_cast<long long>(t_ms / 1000 % 60), static_cast<long long>(t_ms % 1000));
  return buf;
}

std::string export_webvtt(const AnnotationSet& set, const VideoReference& video,
                          Millis point_padding_ms) {
  if (point_padding_ms <= 0) {
    throw Error(ErrorCode::kInvalidRequest, "point padding must be > 0", "point_padding_ms");
  }
  require_valid(set, video);

  std::string out = "WEBVTT\n\n";
  for (const auto& a : sort_timeline(set)) {
    Millis start = a.fragment.begin_ms;
    Millis end = a.fragment.end_ms;
    if (a.fragment.is_point()) {
      end = std::min(start + point_padding_ms, video.duration_ms);
      if (end <= start) start = std::max<Millis>(0, video.duration_ms - point_padding_ms);
    }
    std::string text = body_text(a.body);
    if (std::holds_alternative<ResourceLink>(a.body)) text = "[resource] " + text;
    out += a.id + "\n";
    out += format_vtt_time(start) + " --> " + format_vtt_time(end) + "\n";
    out += vtt_cue_text(text) + "\n\n";
  }
  return out;
}

std::string export_csv(const AnnotationSet& set, const VideoReference& video) {
  require_valid(set, video);
  std::string out = "id,begin_ms,end_ms,author,kind,content,tags\r\n";
  for (const auto& a : sort_timeline(set)) {
    std::string tags;
    for (const auto& t : a.tags) {
      if (!tags.empty()) tags += ';';
      tags += t;
    }
    out += csv_field(a.id) + ',' + std::to_string(a.fragment.begin_ms) + ',' +
           std::to_string(a.fragment.end_ms) + ',' + csv_field(a.author) + ',' +
           std::string(body_kind(a.body)) + ',' + csv_field(body_text(a.body)) + ',' +
           csv_field(tags) + "\r\n";
  }
  return out;
}

}  // namespace hyvid
