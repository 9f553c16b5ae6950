#pragma once

// Temporal (NPT) and spatial (xywh) media fragment directives, the part of a
// video URI after '#'. The accepted grammar is a strict subset of the W3C
// Media Fragments syntax:
//
//   directive := pair ('&' pair)*
//   pair      := key '=' value
//   t         := ['npt:'] time [',' time] | ['npt:'] ',' time
//   time      := SS[.f+] | MM:SS[.f+] | HH:MM:SS[.f+]
//   xywh      := ('pixel' | 'percent') ':' n ',' n ',' n ',' n
//
// Pixel coordinates are integers, percent coordinates allow two fractional
// digits. Unknown keys are skipped; a repeated `t` or `xywh` is an error.

#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "hyvid/model.hpp"

namespace hyvid {

/// End value of a `t=A` directive whose end is "until the end of the video".
inline constexpr Millis kOpenEnd = std::numeric_limits<Millis>::max();

struct FragmentDirective {
  std::optional<TimeFragment> temporal;
  std::optional<SpatialRegion> spatial;

  bool open_ended() const noexcept { return temporal && temporal->end_ms == kOpenEnd; }

  /// Replaces an open end with the video duration.
  FragmentDirective resolved(Millis duration_ms) const;

  bool operator==(const FragmentDirective&) const = default;
};

/// Parses one NPT clock value into milliseconds, rounding sub-millisecond
/// fractions half-up. Throws Error(kInvalidFragment).
Millis parse_npt_time(std::string_view s);

/// Canonical seconds form: "10", "10.5", "3723.25"; never colon form.
std::string format_npt_time(Millis t_ms);

/// Throws Error(kInvalidFragment) on any malformed input.
FragmentDirective parse_fragment_string(std::string_view s);

/// Canonical form, `t=` before `xywh=`. Point fragments print as `t=B,B`,
/// open-ended ones as `t=B`.
std::string serialize_fragment(const FragmentDirective& d);

/// `video.uri#t=...` for the annotation's fragment, plus `&xywh=...` for
/// overlays. Throws when the video URI already carries a fragment.
std::string annotation_fragment_uri(const VideoReference& video, const Annotation& a);

}  // namespace hyvid
