#pragma once

// Comparing, consolidating and grading annotation sets.
//
// Resource links are the comparable unit: each set is represented, per
// resource, by its timeline-first link to that resource (earliest begin, then
// earliest end, then smallest id). Comments and overlays are free text and are
// never matched; they only flow through union and manual merges.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hyvid/model.hpp"

namespace hyvid {

inline constexpr Millis kDefaultToleranceMs = 2000;

struct LinkAgreement {
  std::string resource_id;
  Annotation a;
  Annotation b;

  bool operator==(const LinkAgreement&) const = default;
};

/// Deltas are b minus a.
struct LinkDisagreement {
  std::string resource_id;
  Annotation a;
  Annotation b;
  Millis delta_begin_ms = 0;
  Millis delta_end_ms = 0;

  bool operator==(const LinkDisagreement&) const = default;
};

struct DiffReport {
  Millis tolerance_ms = 0;
  std::vector<LinkAgreement> agreements;        // by resource_id
  std::vector<LinkDisagreement> disagreements;  // by resource_id
  std::vector<Annotation> unique_a;             // timeline order
  std::vector<Annotation> unique_b;

  bool operator==(const DiffReport&) const = default;
};

/// Pairs representative links per resource. Throws kVideoMismatch when the
/// sets annotate different videos, kInvalidRequest on negative tolerance.
DiffReport diff_pair(const AnnotationSet& a, const AnnotationSet& b, Millis tolerance_ms);

struct AnnotationRef {
  std::string set_id;
  std::string annotation_id;

  auto operator<=>(const AnnotationRef&) const = default;
};

struct UnionPolicy {
  bool operator==(const UnionPolicy&) const = default;
};
struct MajorityPolicy {
  int quorum = 1;
  bool operator==(const MajorityPolicy&) const = default;
};
struct ManualPolicy {
  std::vector<AnnotationRef> selected;
  bool operator==(const ManualPolicy&) const = default;
};
using MergePolicy = std::variant<UnionPolicy, MajorityPolicy, ManualPolicy>;

struct DroppedAnnotation {
  std::string set_id;
  std::string annotation_id;
  std::string reason;

  bool operator==(const DroppedAnnotation&) const = default;
};

struct MergeResult {
  std::vector<Annotation> merged;  // timeline order, ids m1, m2, ... (zero-padded)
  std::map<std::string, std::vector<AnnotationRef>> provenance;
  std::vector<DroppedAnnotation> dropped;

  bool operator==(const MergeResult&) const = default;
};

/// Consolidates sets into one timeline under `policy`.
///
/// - Union keeps everything; annotations with identical body and fragment
///   collapse to the earliest-created one and list every source.
/// - Majority emits one link per resource linked by at least `quorum` sets,
///   placed at the median of the sets' representative links.
/// - Manual emits exactly the selected annotations.
///
/// Output ids are freshly minted (`m` + zero-padded index) in timeline order.
MergeResult merge(std::span<const AnnotationSet> sets, const MergePolicy& policy);

/// Componentwise median of begins and ends; an even count averages the two
/// middle values rounding half-up. end is clamped up to begin if needed.
TimeFragment median_fragment(std::span<const TimeFragment> fragments);

struct Misplacement {
  std::string resource_id;
  Millis delta_begin_ms = 0;  // learner minus key

  bool operator==(const Misplacement&) const = default;
};

struct GradeReport {
  int total = 0;
  int correct = 0;
  std::vector<std::string> missing;
  std::vector<Misplacement> misplaced;
  double score = 1.0;

  bool operator==(const GradeReport&) const = default;
};

/// Scores a learner's placements against a key holding only resource links.
/// A resource is correct when the learner's representative link begins within
/// tolerance of the key's; ends are not compared.
GradeReport grade(const AnnotationSet& learner, const AnnotationSet& key, Millis tolerance_ms);

/// Timeline-first link per resource id.
std::map<std::string, const Annotation*> representative_links(const AnnotationSet& set);

}  // namespace hyvid
