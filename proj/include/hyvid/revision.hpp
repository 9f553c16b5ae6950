#pragma once

// Append-only per-set revision history. A log is a value: appending returns a
// new log and leaves the input untouched. Replaying entries 1..n from the
// empty set reconstructs the set as of revision n.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyvid/model.hpp"

namespace hyvid {

enum class RevisionOp { kAdd, kUpdate, kRemove };

std::string_view to_string(RevisionOp op);
std::optional<RevisionOp> revision_op_from_string(std::string_view s);

struct RevisionEntry {
  /// 1-based position in the log. Zero on entries not yet appended.
  std::int64_t seq = 0;
  std::string actor;
  Timestamp at;
  RevisionOp op = RevisionOp::kAdd;
  std::string annotation_id;
  std::optional<Annotation> before;
  std::optional<Annotation> after;

  bool operator==(const RevisionEntry&) const = default;
};

struct RevisionLog {
  std::string set_id;
  std::vector<RevisionEntry> entries;

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(entries.size()); }
  bool operator==(const RevisionLog&) const = default;
};

/// Structural checks that do not depend on the current state: add carries
/// only `after`, remove only `before`, update both, and the ids agree.
std::vector<Violation> check_entry_shape(const RevisionEntry& entry);

/// Applies one entry to a state (any order) and returns the new state in
/// timeline order. Throws kUnknownTarget / kDuplicateId / kReplayMismatch when
/// the entry does not fit the state; `before` must equal the current value.
std::vector<Annotation> apply_revision(std::span<const Annotation> state,
                                       const RevisionEntry& entry);

/// Returns `log` with `entry` appended as seq = size() + 1. A non-zero
/// entry.seq must already equal that value.
RevisionLog append_revision(const RevisionLog& log, RevisionEntry entry);

/// State after entries 1..upto, in timeline order.
std::vector<Annotation> replay(const RevisionLog& log, std::int64_t upto);
inline std::vector<Annotation> replay(const RevisionLog& log) { return replay(log, log.size()); }

/// Minimal entry sequence (removes, then updates, then adds, each by id)
/// turning `from` into `to`. Entries are unsequenced.
std::vector<RevisionEntry> plan_revisions(std::span<const Annotation> from,
                                          std::span<const Annotation> to,
                                          const std::string& actor, Timestamp at);

}  // namespace hyvid
