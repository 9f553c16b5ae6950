#include "hyvid/media_fragment.hpp"

#include <cstdint>
#include <vector>

namespace hyvid {
namespace {

constexpr std::string_view kNptPrefix = "npt:";
// Coordinates beyond this are rejected so region arithmetic cannot overflow.
constexpr std::int64_t kMaxCoordinate = 1'000'000'000'000;

[[noreturn]] void fail(std::string message) {
  throw Error(ErrorCode::kInvalidFragment, std::move(message));
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_digit(c)) return false;
  }
  return true;
}

// Decimal digits to an integer; nullopt on overflow.
std::optional<std::int64_t> to_int(std::string_view digits) {
  std::int64_t v = 0;
  for (char c : digits) {
    if (__builtin_mul_overflow(v, 10, &v) || __builtin_add_overflow(v, c - '0', &v)) {
      return std::nullopt;
    }
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// NPT clock value without the `npt:` prefix.
Millis parse_clock(std::string_view s) {
  const std::string quoted = "'" + std::string(s) + "'";
  if (s.empty()) fail("empty time value");

  std::string_view fraction;
  bool has_fraction = false;
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    fraction = s.substr(dot + 1);
    s = s.substr(0, dot);
    has_fraction = true;
    if (!all_digits(fraction)) fail("malformed fractional seconds in " + quoted);
  }

  const auto fields = split(s, ':');
  if (fields.size() > 3) fail("too many ':' fields in " + quoted);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!all_digits(fields[i])) fail("malformed time " + quoted);
    if (i > 0 && fields[i].size() != 2) fail("minutes and seconds need two digits in " + quoted);
  }

  std::vector<std::int64_t> values;
  for (auto f : fields) {
    const auto v = to_int(f);
    if (!v) fail("time out of range " + quoted);
    values.push_back(*v);
  }
  if (values.size() >= 2) {
    for (std::size_t i = values.size() - 2; i < values.size(); ++i) {
      if (values[i] >= 60) fail("minutes/seconds must be < 60 in " + quoted);
    }
  }

  std::int64_t seconds = 0;
  for (auto v : values) {
    if (__builtin_mul_overflow(seconds, 60, &seconds) ||
        __builtin_add_overflow(seconds, v, &seconds)) {
      fail("time out of range " + quoted);
    }
  }

  std::int64_t ms = 0;
  if (has_fraction) {
    for (std::size_t i = 0; i < 3; ++i) {
      ms = ms * 10 + (i < fraction.size() ? fraction[i] - '0' : 0);
    }
    if (fraction.size() > 3 && fraction[3] >= '5') ++ms;
  }

  std::int64_t total = 0;
  if (__builtin_mul_overflow(seconds, 1000, &total) || __builtin_add_overflow(total, ms, &total) ||
      total == kOpenEnd) {
    fail("time out of range " + quoted);
  }
  return total;
}

TimeFragment parse_temporal(std::string_view v) {
  if (v.substr(0, kNptPrefix.size()) == kNptPrefix) v.remove_prefix(kNptPrefix.size());
  if (v.empty()) fail("empty temporal value");

  TimeFragment f;
  const auto comma = v.find(',');
  if (comma == std::string_view::npos) {
    f.begin_ms = parse_clock(v);
    f.end_ms = kOpenEnd;
    return f;
  }
  const auto begin = v.substr(0, comma);
  const auto end = v.substr(comma + 1);
  if (end.empty()) fail("missing end time after ','");
  f.begin_ms = begin.empty() ? 0 : parse_clock(begin);
  f.end_ms = parse_clock(end);
  if (f.begin_ms > f.end_ms) fail("begin>end");
  return f;
}

std::int64_t parse_coordinate(std::string_view s, RegionUnit unit) {
  const std::string quoted = "'" + std::string(s) + "'";
  std::string_view whole = s;
  std::string_view fraction;
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    if (unit == RegionUnit::kPixel) fail("pixel coordinates must be integers: " + quoted);
    whole = s.substr(0, dot);
    fraction = s.substr(dot + 1);
    if (!all_digits(fraction) || fraction.size() > 2) {
      fail("percent coordinates allow at most two fractional digits: " + quoted);
    }
  }
  if (!all_digits(whole)) fail("malformed coordinate " + quoted);
  const auto v = to_int(whole);
  if (!v || *v > kMaxCoordinate) fail("coordinate out of range " + quoted);
  if (unit == RegionUnit::kPixel) return *v;
  std::int64_t hundredths = *v * SpatialRegion::kPercentScale;
  if (!fraction.empty()) {
    hundredths += (fraction[0] - '0') * 10 + (fraction.size() > 1 ? fraction[1] - '0' : 0);
  }
  return hundredths;
}

SpatialRegion parse_spatial(std::string_view v) {
  const auto colon = v.find(':');
  if (colon == std::string_view::npos) fail("xywh needs a 'pixel:' or 'percent:' unit prefix");
  const auto unit = region_unit_from_string(v.substr(0, colon));
  if (!unit) fail("unknown xywh unit '" + std::string(v.substr(0, colon)) + "'");
  const auto parts = split(v.substr(colon + 1), ',');
  if (parts.size() != 4) fail("xywh needs exactly four values");
  SpatialRegion r;
  r.unit = *unit;
  r.x = parse_coordinate(parts[0], *unit);
  r.y = parse_coordinate(parts[1], *unit);
  r.w = parse_coordinate(parts[2], *unit);
  r.h = parse_coordinate(parts[3], *unit);
  if (const auto bad = validate_region(r); !bad.empty()) {
    fail("invalid region: " + bad.front().message);
  }
  return r;
}

std::string format_coordinate(std::int64_t v, RegionUnit unit) {
  if (unit == RegionUnit::kPixel) return std::to_string(v);
  std::string out = std::to_string(v / SpatialRegion::kPercentScale);
  const auto frac = v % SpatialRegion::kPercentScale;
  if (frac != 0) {
    out += '.';
    out += static_cast<char>('0' + frac / 10);
    if (frac % 10 != 0) out += static_cast<char>('0' + frac % 10);
  }
  return out;
}

}  // namespace

FragmentDirective FragmentDirective::resolved(Millis duration_ms) const {
  FragmentDirective out = *this;
  if (out.open_ended()) out.temporal->end_ms = duration_ms;
  return out;
}

Millis parse_npt_time(std::string_view s) {
  if (s.substr(0, kNptPrefix.size()) == kNptPrefix) s.remove_prefix(kNptPrefix.size());
  return parse_clock(s);
}

std::string format_npt_time(Millis t_ms) {
  std::string out = std::to_string(t_ms / 1000);
  auto frac = t_ms % 1000;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 3 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

FragmentDirective parse_fragment_string(std::string_view s) {
  if (s.empty()) fail("empty directive");
  FragmentDirective d;
  for (auto pair : split(s, '&')) {
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      fail("malformed pair '" + std::string(pair) + "'");
    }
    const auto key = pair.substr(0, eq);
    const auto value = pair.substr(eq + 1);
    if (key == "t") {
      if (d.temporal) fail("duplicate 't' directive");
      d.temporal = parse_temporal(value);
    } else if (key == "xywh") {
      if (d.spatial) fail("duplicate 'xywh' directive");
      d.spatial = parse_spatial(value);
    }
  }
  if (!d.temporal && !d.spatial) fail("empty directive");
  return d;
}

std::string serialize_fragment(const FragmentDirective& d) {
  std::string out;
  if (d.temporal) {
    out += "t=" + format_npt_time(d.temporal->begin_ms);
    if (d.temporal->end_ms != kOpenEnd) out += "," + format_npt_time(d.temporal->end_ms);
  }
  if (d.spatial) {
    if (!out.empty()) out += '&';
    const auto& r = *d.spatial;
    out += "xywh=";
    out += to_string(r.unit);
    out += ':' + format_coordinate(r.x, r.unit) + ',' + format_coordinate(r.y, r.unit) + ',' +
           format_coordinate(r.w, r.unit) + ',' + format_coordinate(r.h, r.unit);
  }
  return out;
}

std::string annotation_fragment_uri(const VideoReference& video, const Annotation& a) {
  if (video.uri.find('#') != std::string::npos) {
    throw Error(ErrorCode::kInvalidFragment, "video URI already contains a fragment", "uri");
  }
  FragmentDirective d;
  d.temporal = a.fragment;
  if (const auto* overlay = std::get_if<Overlay>(&a.body)) d.spatial = overlay->region;
  return video.uri + "#" + serialize_fragment(d);
}

}  // namespace hyvid
