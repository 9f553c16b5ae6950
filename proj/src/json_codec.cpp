#include "hyvid/json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace hyvid {
namespace {

constexpr std::int64_t kMaxJsonCoordinate = 1'000'000'000'000;

[[noreturn]] void invalid(const std::string& path, std::string message) {
  throw Error(ErrorCode::kValidationFailed, std::move(message), path);
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const Json& require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected array");
  return j;
}

Json encode_coordinate(std::int64_t v, RegionUnit unit) {
  if (unit == RegionUnit::kPixel || v % SpatialRegion::kPercentScale == 0) {
    return unit == RegionUnit::kPixel ? Json(v) : Json(v / SpatialRegion::kPercentScale);
  }
  return Json(static_cast<double>(v) / SpatialRegion::kPercentScale);
}

std::int64_t decode_coordinate(const Json& j, RegionUnit unit, const std::string& path) {
  if (j.is_number_integer()) {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > std::uint64_t(kMaxJsonCoordinate)) {
      invalid(path, "coordinate out of range");
    }
    const auto v = j.get<std::int64_t>();
    if (std::llabs(v) > kMaxJsonCoordinate) invalid(path, "coordinate out of range");
    return unit == RegionUnit::kPixel ? v : v * SpatialRegion::kPercentScale;
  }
  if (!j.is_number_float()) invalid(path, "expected number");
  if (unit == RegionUnit::kPixel) invalid(path, "pixel coordinates must be integers");
  const double scaled = j.get<double>() * SpatialRegion::kPercentScale;
  if (!std::isfinite(scaled) || std::fabs(scaled) > double(kMaxJsonCoordinate)) {
    invalid(path, "coordinate out of range");
  }
  const auto rounded = std::llround(scaled);
  if (std::fabs(scaled - double(rounded)) > 1e-6) {
    invalid(path, "percent coordinates allow at most two fractional digits");
  }
  return rounded;
}

template <typename T, typename Decode>
std::vector<T> decode_list(const Json& j, const std::string& path, Decode decode) {
  std::vector<T> out;
  require_array(j, path);
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(decode(j[i], index_path(path, i)));
  return out;
}

Json encode_refs(const std::vector<AnnotationRef>& refs) {
  Json out = Json::array();
  for (const auto& r : refs) out.push_back(encode(r));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string canonical(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::string canonical_envelope(const Json& j) {
  if (!j.is_object() || !j.contains("format") || !j.contains("version")) return canonical(j);
  std::string out = "{\"format\":" + canonical(j["format"]) +
                    ",\"version\":" + canonical(j["version"]);
  for (const auto& [key, value] : j.items()) {
    if (key == "format" || key == "version") continue;
    out += ',' + canonical(Json(key)) + ':' + canonical(value);
  }
  out += '}';
  return out;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidJson, e.what());
  }
}

// ---------------------------------------------------------------------------
// JsonFields

JsonFields::JsonFields(const Json& j, std::string path,
                       std::initializer_list<std::string_view> allowed)
    : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) invalid(path_, "expected object");
  for (const auto& [key, value] : j_.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      invalid(this->path(key), "unknown field");
    }
  }
}

std::string JsonFields::path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

const Json& JsonFields::required(std::string_view key) const {
  const auto it = j_.find(key);
  if (it == j_.end()) invalid(path(key), "missing field");
  return *it;
}

const Json* JsonFields::optional(std::string_view key) const {
  const auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

std::string JsonFields::string(std::string_view key) const {
  const auto& v = required(key);
  if (!v.is_string()) invalid(path(key), "expected string");
  return v.get<std::string>();
}

std::optional<std::string> JsonFields::optional_string(std::string_view key) const {
  const auto* v = optional(key);
  if (!v) return std::nullopt;
  if (!v->is_string()) invalid(path(key), "expected string");
  return v->get<std::string>();
}

std::int64_t JsonFields::integer(std::string_view key) const {
  const auto& v = required(key);
  if (!v.is_number_integer()) invalid(path(key), "expected integer");
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
    invalid(path(key), "integer out of range");
  }
  return v.get<std::int64_t>();
}

std::optional<std::int64_t> JsonFields::optional_integer(std::string_view key) const {
  if (!optional(key)) return std::nullopt;
  return integer(key);
}

std::vector<std::string> JsonFields::strings(std::string_view key) const {
  const auto& v = required(key);
  return decode_list<std::string>(v, path(key), [](const Json& item, const std::string& p) {
    if (!item.is_string()) invalid(p, "expected string");
    return item.get<std::string>();
  });
}

// ---------------------------------------------------------------------------
// Encoders

Json encode(const TimeFragment& f) { return {{"begin_ms", f.begin_ms}, {"end_ms", f.end_ms}}; }

Json encode(const SpatialRegion& r) {
  return {{"unit", to_string(r.unit)},
          {"x", encode_coordinate(r.x, r.unit)},
          {"y", encode_coordinate(r.y, r.unit)},
          {"w", encode_coordinate(r.w, r.unit)},
          {"h", encode_coordinate(r.h, r.unit)}};
}

Json encode(const Body& b) {
  Json out = {{"kind", body_kind(b)}};
  if (const auto* c = std::get_if<Comment>(&b)) {
    out["text"] = c->text;
  } else if (const auto* l = std::get_if<ResourceLink>(&b)) {
    out["resource_id"] = l->resource_id;
    if (l->note) out["note"] = *l->note;
  } else {
    const auto& o = std::get<Overlay>(b);
    out["text"] = o.text;
    out["region"] = encode(o.region);
  }
  return out;
}

Json encode(const Annotation& a) {
  return {{"id", a.id},
          {"author", a.author},
          {"created", a.created.to_string()},
          {"modified", a.modified.to_string()},
          {"fragment", encode(a.fragment)},
          {"body", encode(a.body)},
          {"tags", a.tags}};
}

Json encode(std::span<const Annotation> annotations) {
  Json out = Json::array();
  for (const auto& a : annotations) out.push_back(encode(a));
  return out;
}

Json encode_replay(const RevisionLog& log, std::int64_t at) {
  return {{"set_id", log.set_id}, {"at", at}, {"annotations", encode(replay(log, at))}};
}

Json encode(const VideoReference& v) {
  return {{"id", v.id}, {"uri", v.uri}, {"duration_ms", v.duration_ms}, {"title", v.title}};
}

Json encode(const Resource& r) {
  Json out = {{"id", r.id}, {"title", r.title}, {"kind", to_string(r.kind)}, {"url", r.url}};
  if (r.description) out["description"] = *r.description;
  return out;
}

Json encode(const RevisionEntry& e) {
  Json out = {{"seq", e.seq},
              {"actor", e.actor},
              {"at", e.at.to_string()},
              {"op", to_string(e.op)},
              {"annotation_id", e.annotation_id}};
  if (e.before) out["before"] = encode(*e.before);
  if (e.after) out["after"] = encode(*e.after);
  return out;
}

Json encode(const RevisionLog& log) {
  Json entries = Json::array();
  for (const auto& e : log.entries) entries.push_back(encode(e));
  return {{"format", kLogFormat},
          {"version", kFormatVersion},
          {"set_id", log.set_id},
          {"entries", std::move(entries)}};
}

Json encode(const AnnotationRef& ref) {
  return {{"set_id", ref.set_id}, {"annotation_id", ref.annotation_id}};
}

Json encode(const DiffReport& report) {
  Json agreements = Json::array();
  for (const auto& x : report.agreements) {
    agreements.push_back({{"resource_id", x.resource_id}, {"a", encode(x.a)}, {"b", encode(x.b)}});
  }
  Json disagreements = Json::array();
  for (const auto& x : report.disagreements) {
    disagreements.push_back({{"resource_id", x.resource_id},
                             {"a", encode(x.a)},
                             {"b", encode(x.b)},
                             {"delta_begin_ms", x.delta_begin_ms},
                             {"delta_end_ms", x.delta_end_ms}});
  }
  return {{"tolerance_ms", report.tolerance_ms},
          {"agreements", std::move(agreements)},
          {"disagreements", std::move(disagreements)},
          {"unique_a", encode(report.unique_a)},
          {"unique_b", encode(report.unique_b)}};
}

Json encode(const MergeResult& result) {
  Json provenance = Json::object();
  for (const auto& [id, refs] : result.provenance) provenance[id] = encode_refs(refs);
  Json dropped = Json::array();
  for (const auto& d : result.dropped) {
    dropped.push_back(
        {{"set_id", d.set_id}, {"annotation_id", d.annotation_id}, {"reason", d.reason}});
  }
  return {{"merged", encode(result.merged)},
          {"provenance", std::move(provenance)},
          {"dropped", std::move(dropped)}};
}

Json encode(const GradeReport& report) {
  Json misplaced = Json::array();
  for (const auto& m : report.misplaced) {
    misplaced.push_back({{"resource_id", m.resource_id}, {"delta_begin_ms", m.delta_begin_ms}});
  }
  return {{"total", report.total},
          {"correct", report.correct},
          {"missing", report.missing},
          {"misplaced", std::move(misplaced)},
          {"score", report.score}};
}

Json encode(const MergePolicy& policy) {
  if (std::holds_alternative<UnionPolicy>(policy)) return {{"kind", "union"}};
  if (const auto* m = std::get_if<MajorityPolicy>(&policy)) {
    return {{"kind", "majority"}, {"quorum", m->quorum}};
  }
  return {{"kind", "manual"}, {"selected", encode_refs(std::get<ManualPolicy>(policy).selected)}};
}

// ---------------------------------------------------------------------------
// Decoders

TimeFragment decode_fragment(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"begin_ms", "end_ms"});
  return TimeFragment{f.integer("begin_ms"), f.integer("end_ms")};
}

SpatialRegion decode_region(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"unit", "x", "y", "w", "h"});
  const auto unit = region_unit_from_string(f.string("unit"));
  if (!unit) invalid(f.path("unit"), "unit must be 'pixel' or 'percent'");
  SpatialRegion r;
  r.unit = *unit;
  r.x = decode_coordinate(f.required("x"), r.unit, f.path("x"));
  r.y = decode_coordinate(f.required("y"), r.unit, f.path("y"));
  r.w = decode_coordinate(f.required("w"), r.unit, f.path("w"));
  r.h = decode_coordinate(f.required("h"), r.unit, f.path("h"));
  return r;
}

Body decode_body(const Json& j, const std::string& path) {
  if (!j.is_object()) invalid(path, "expected object");
  const auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) {
    invalid(path + ".kind", "expected 'comment', 'resource' or 'overlay'");
  }
  const auto kind = kind_it->get<std::string>();
  if (kind == "comment") {
    const JsonFields f(j, path, {"kind", "text"});
    return Comment{f.string("text")};
  }
  if (kind == "resource") {
    const JsonFields f(j, path, {"kind", "resource_id", "note"});
    return ResourceLink{f.string("resource_id"), f.optional_string("note")};
  }
  if (kind == "overlay") {
    const JsonFields f(j, path, {"kind", "text", "region"});
    return Overlay{f.string("text"), decode_region(f.required("region"), f.path("region"))};
  }
  invalid(path + ".kind", "expected 'comment', 'resource' or 'overlay'");
}

namespace {

Timestamp decode_timestamp(const JsonFields& f, std::string_view key) {
  const auto s = f.string(key);
  try {
    return Timestamp::parse(s);
  } catch (const Error& e) {
    invalid(f.path(key), e.what());
  }
}

}  // namespace

Annotation decode_annotation(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"id", "author", "created", "modified", "fragment", "body", "tags"});
  Annotation a;
  a.id = f.string("id");
  a.author = f.string("author");
  a.created = decode_timestamp(f, "created");
  a.modified = decode_timestamp(f, "modified");
  a.fragment = decode_fragment(f.required("fragment"), f.path("fragment"));
  a.body = decode_body(f.required("body"), f.path("body"));
  a.tags = f.strings("tags");
  return a;
}

VideoReference decode_video(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"id", "uri", "duration_ms", "title"});
  return VideoReference{f.string("id"), f.string("uri"), f.integer("duration_ms"),
                        f.string("title")};
}

Resource decode_resource(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"id", "title", "kind", "url", "description"});
  Resource r;
  r.id = f.string("id");
  r.title = f.string("title");
  const auto kind = resource_kind_from_string(f.string("kind"));
  if (!kind) invalid(f.path("kind"), "kind must be image, text, audio, video or web");
  r.kind = *kind;
  r.url = f.string("url");
  r.description = f.optional_string("description");
  return r;
}

RevisionEntry decode_revision_entry(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"seq", "actor", "at", "op", "annotation_id", "before", "after"});
  RevisionEntry e;
  e.seq = f.optional_integer("seq").value_or(0);
  e.actor = f.string("actor");
  e.at = decode_timestamp(f, "at");
  const auto op = revision_op_from_string(f.string("op"));
  if (!op) invalid(f.path("op"), "op must be add, update or remove");
  e.op = *op;
  e.annotation_id = f.string("annotation_id");
  if (const auto* b = f.optional("before")) e.before = decode_annotation(*b, f.path("before"));
  if (const auto* a = f.optional("after")) e.after = decode_annotation(*a, f.path("after"));
  return e;
}

RevisionLog decode_revision_log(const Json& j) {
  const JsonFields f(j, "", {"format", "version", "set_id", "entries"});
  if (f.string("format") != kLogFormat) {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown format tag", "format");
  }
  if (f.integer("version") != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported version " + std::to_string(f.integer("version")), "version");
  }
  RevisionLog log;
  log.set_id = f.string("set_id");
  log.entries = decode_list<RevisionEntry>(f.required("entries"), "entries",
                                           [](const Json& e, const std::string& p) {
                                             return decode_revision_entry(e, p);
                                           });
  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    if (e.seq != static_cast<std::int64_t>(i) + 1) {
      invalid(index_path("entries", i) + ".seq", "expected seq " + std::to_string(i + 1));
    }
    if (auto shape = check_entry_shape(e); !shape.empty()) {
      invalid(index_path("entries", i) + "." + shape.front().path, shape.front().message);
    }
  }
  return log;
}

AnnotationRef decode_annotation_ref(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"set_id", "annotation_id"});
  return AnnotationRef{f.string("set_id"), f.string("annotation_id")};
}

MergePolicy decode_merge_policy(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    invalid(path + ".kind", "expected 'union', 'majority' or 'manual'");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "union") {
    const JsonFields f(j, path, {"kind"});
    return UnionPolicy{};
  }
  if (kind == "majority") {
    const JsonFields f(j, path, {"kind", "quorum"});
    const auto q = f.integer("quorum");
    if (q < 1 || q > std::numeric_limits<int>::max()) invalid(f.path("quorum"), "quorum must be >= 1");
    return MajorityPolicy{static_cast<int>(q)};
  }
  if (kind == "manual") {
    const JsonFields f(j, path, {"kind", "selected"});
    return ManualPolicy{decode_list<AnnotationRef>(
        f.required("selected"), f.path("selected"),
        [](const Json& e, const std::string& p) { return decode_annotation_ref(e, p); })};
  }
  invalid(path + ".kind", "expected 'union', 'majority' or 'manual'");
}

}  // namespace hyvid
