#include "hyvid/revision.hpp"

#include <algorithm>
#include <map>

namespace hyvid {

std::string_view to_string(RevisionOp op) {
  switch (op) {
    case RevisionOp::kAdd: return "add";
    case RevisionOp::kUpdate: return "update";
    case RevisionOp::kRemove: return "remove";
  }
  return "add";
}

std::optional<RevisionOp> revision_op_from_string(std::string_view s) {
  if (s == "add") return RevisionOp::kAdd;
  if (s == "update") return RevisionOp::kUpdate;
  if (s == "remove") return RevisionOp::kRemove;
  return std::nullopt;
}

std::vector<Violation> check_entry_shape(const RevisionEntry& e) {
  std::vector<Violation> out;
  if (e.actor.empty()) out.push_back({"actor", "empty actor"});
  if (!is_valid_id(e.annotation_id)) out.push_back({"annotation_id", "invalid id"});
  switch (e.op) {
    case RevisionOp::kAdd:
      if (e.before) out.push_back({"before", "add must not carry 'before'"});
      if (!e.after) out.push_back({"after", "add requires 'after'"});
      break;
    case RevisionOp::kRemove:
      if (!e.before) out.push_back({"before", "remove requires 'before'"});
      if (e.after) out.push_back({"after", "remove must not carry 'after'"});
      break;
    case RevisionOp::kUpdate:
      if (!e.before) out.push_back({"before", "update requires 'before'"});
      if (!e.after) out.push_back({"after", "update requires 'after'"});
      break;
  }
  if (e.before && e.before->id != e.annotation_id) {
    out.push_back({"before.id", "id differs from annotation_id"});
  }
  if (e.after && e.after->id != e.annotation_id) {
    out.push_back({"after.id", "id differs from annotation_id"});
  }
  return out;
}

namespace {

using State = std::map<std::string, Annotation, std::less<>>;

void apply_in_place(State& state, const RevisionEntry& e) {
  if (auto shape = check_entry_shape(e); !shape.empty()) {
    throw Error(ErrorCode::kValidationFailed, std::move(shape));
  }
  const auto it = state.find(e.annotation_id);
  if (e.op == RevisionOp::kAdd) {
    if (it != state.end()) {
      throw Error(ErrorCode::kDuplicateId, "annotation " + e.annotation_id + " already exists",
                  "annotation_id");
    }
    state.emplace(e.annotation_id, *e.after);
    return;
  }
  if (it == state.end()) {
    throw Error(ErrorCode::kUnknownTarget, "no annotation " + e.annotation_id, "annotation_id");
  }
  if (it->second != *e.before) {
    throw Error(ErrorCode::kReplayMismatch,
                "'before' does not match the current state of " + e.annotation_id, "before");
  }
  if (e.op == RevisionOp::kRemove) {
    state.erase(it);
  } else {
    it->second = *e.after;
  }
}

std::vector<Annotation> to_timeline(const State& state) {
  std::vector<Annotation> out;
  out.reserve(state.size());
  for (const auto& [id, a] : state) out.push_back(a);
  std::stable_sort(out.begin(), out.end(), timeline_less);
  return out;
}

}  // namespace

std::vector<Annotation> apply_revision(std::span<const Annotation> annotations,
                                       const RevisionEntry& entry) {
  State state;
  for (const auto& a : annotations) {
    if (!state.emplace(a.id, a).second) {
      throw Error(ErrorCode::kDuplicateId, "state holds duplicate id " + a.id);
    }
  }
  apply_in_place(state, entry);
  return to_timeline(state);
}

RevisionLog append_revision(const RevisionLog& log, RevisionEntry entry) {
  const auto next = log.size() + 1;
  if (entry.seq != 0 && entry.seq != next) {
    throw Error(ErrorCode::kValidationFailed,
                "expected seq " + std::to_string(next) + ", got " + std::to_string(entry.seq),
                "seq");
  }
  entry.seq = next;
  State state;
  for (const auto& e : log.entries) apply_in_place(state, e);
  apply_in_place(state, entry);

  RevisionLog out = log;
  out.entries.push_back(std::move(entry));
  return out;
}

std::vector<Annotation> replay(const RevisionLog& log, std::int64_t upto) {
  if (upto < 0 || upto > log.size()) {
    throw Error(ErrorCode::kInvalidRequest,
                "replay position " + std::to_string(upto) + " outside [0, " +
                    std::to_string(log.size()) + "]");
  }
  State state;
  for (std::int64_t i = 0; i < upto; ++i) apply_in_place(state, log.entries[i]);
  return to_timeline(state);
}

std::vector<RevisionEntry> plan_revisions(std::span<const Annotation> from,
                                          std::span<const Annotation> to,
                                          const std::string& actor, Timestamp at) {
  State old_state;
  for (const auto& a : from) old_state.emplace(a.id, a);
  State new_state;
  for (const auto& a : to) new_state.emplace(a.id, a);

  std::vector<RevisionEntry> out;
  auto entry = [&](RevisionOp op, const std::string& id) {
    RevisionEntry e;
    e.actor = actor;
    e.at = at;
    e.op = op;
    e.annotation_id = id;
    return e;
  };
  for (const auto& [id, a] : old_state) {
    if (!new_state.contains(id)) {
      auto e = entry(RevisionOp::kRemove, id);
      e.before = a;
      out.push_back(std::move(e));
    }
  }
  for (const auto& [id, a] : new_state) {
    const auto it = old_state.find(id);
    if (it != old_state.end() && it->second != a) {
      auto e = entry(RevisionOp::kUpdate, id);
      e.before = it->second;
      e.after = a;
      out.push_back(std::move(e));
    }
  }
  for (const auto& [id, a] : new_state) {
    if (!old_state.contains(id)) {
      auto e = entry(RevisionOp::kAdd, id);
      e.after = a;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace hyvid
