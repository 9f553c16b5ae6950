#pragma once

// Canonical set documents and export formats.
//
// The JSON document is the authoritative exchange form:
//
//   {"format":"hyvid-annotations","version":1,"annotations":[...],
//    "id":"...","owner":"...","revision":N,"video":{...}}
//
// `format` and `version` lead; every other key, at every depth, is sorted.
// Annotations appear in timeline order, so equal sets export to identical
// bytes. WebVTT and CSV are lossy, export-only views.

#include <string>
#include <string_view>

#include "hyvid/json_codec.hpp"
#include "hyvid/model.hpp"

namespace hyvid {

inline constexpr Millis kDefaultPointPaddingMs = 1000;

/// Throws Error(kValidationFailed) when the set does not validate against
/// the video.
std::string export_set_json(const AnnotationSet& set, const VideoReference& video);

struct ImportedSet {
  AnnotationSet set;
  VideoReference video;
  /// True when the document listed annotations out of timeline order; the
  /// returned set is always sorted.
  bool reordered = false;
};

/// Throws Error with kInvalidJson, kUnsupportedFormat, kUnsupportedVersion or
/// kValidationFailed (with the path of every offending field).
ImportedSet import_set_json(std::string_view bytes);

/// Same as import_set_json for an already-parsed document.
ImportedSet decode_set_document(const nlohmann::json& doc);

/// Re-indents a canonical document for humans. Not canonical.
std::string pretty_json(std::string_view canonical_bytes);

/// One cue per annotation in timeline order. Point annotations are padded to
/// `point_padding_ms`, clamped to the video; a point at the very end is
/// shifted back so every cue keeps end > start.
std::string export_webvtt(const AnnotationSet& set, const VideoReference& video,
                          Millis point_padding_ms = kDefaultPointPaddingMs);

/// `id,begin_ms,end_ms,author,kind,content,tags` with RFC 4180 quoting and
/// CRLF record separators; tags are joined with ';'.
std::string export_csv(const AnnotationSet& set, const VideoReference& video);

/// `HH:MM:SS.mmm`, hours at least two digits.
std::string format_vtt_time(Millis t_ms);

}  // namespace hyvid
