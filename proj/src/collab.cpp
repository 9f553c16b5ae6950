#include "hyvid/collab.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <tuple>

namespace hyvid {
namespace {

void require_same_video(std::span<const AnnotationSet> sets) {
  for (const auto& s : sets) {
    if (s.video_id != sets.front().video_id) {
      throw Error(ErrorCode::kVideoMismatch, "set " + s.id + " annotates video " + s.video_id +
                                                 ", expected " + sets.front().video_id);
    }
  }
}

Millis median_of(std::vector<Millis> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2] + 1) >> 1;
}

// Identity used to collapse duplicates under union: body content plus
// fragment, ignoring id, author, timestamps and tags.
using ContentKey = std::tuple<Millis, Millis, std::size_t, std::string, std::string, bool,
                              std::string, int, std::int64_t, std::int64_t, std::int64_t,
                              std::int64_t>;

ContentKey content_key(const Annotation& a) {
  ContentKey k{a.fragment.begin_ms, a.fragment.end_ms, a.body.index(), "", "", false, "", 0, 0,
               0, 0, 0};
  if (const auto* c = std::get_if<Comment>(&a.body)) {
    std::get<3>(k) = c->text;
  } else if (const auto* l = std::get_if<ResourceLink>(&a.body)) {
    std::get<4>(k) = l->resource_id;
    std::get<5>(k) = l->note.has_value();
    std::get<6>(k) = l->note.value_or("");
  } else {
    const auto& o = std::get<Overlay>(a.body);
    std::get<3>(k) = o.text;
    std::get<7>(k) = static_cast<int>(o.region.unit);
    std::get<8>(k) = o.region.x;
    std::get<9>(k) = o.region.y;
    std::get<10>(k) = o.region.w;
    std::get<11>(k) = o.region.h;
  }
  return k;
}

struct Candidate {
  Annotation annotation;
  std::vector<AnnotationRef> sources;
};

MergeResult finish(std::vector<Candidate> candidates, std::vector<DroppedAnnotation> dropped) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    const auto kx = std::tie(x.annotation.fragment.begin_ms, x.annotation.fragment.end_ms);
    const auto ky = std::tie(y.annotation.fragment.begin_ms, y.annotation.fragment.end_ms);
    if (kx != ky) return kx < ky;
    const auto bx = content_key(x.annotation);
    const auto by = content_key(y.annotation);
    if (bx != by) return bx < by;
    return x.sources < y.sources;
  });

  const auto width = std::to_string(candidates.size()).size();
  MergeResult out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string index = std::to_string(i + 1);
    index.insert(0, width - index.size(), '0');
    auto& c = candidates[i];
    c.annotation.id = "m" + index;
    out.provenance.emplace(c.annotation.id, std::move(c.sources));
    out.merged.push_back(std::move(c.annotation));
  }
  out.dropped = std::move(dropped);
  return out;
}

MergeResult merge_union(std::span<const AnnotationSet> sets) {
  std::map<ContentKey, std::size_t> groups;
  std::vector<Candidate> candidates;
  for (const auto& set : sets) {
    for (const auto& a : set.annotations) {
      const AnnotationRef ref{set.id, a.id};
      const auto [it, inserted] = groups.emplace(content_key(a), candidates.size());
      if (inserted) {
        candidates.push_back({a, {ref}});
        continue;
      }
      auto& c = candidates[it->second];
      c.sources.push_back(ref);
      if (a.created < c.annotation.created) c.annotation = a;
    }
  }
  return finish(std::move(candidates), {});
}

MergeResult merge_majority(std::span<const AnnotationSet> sets, int quorum) {
  std::vector<std::map<std::string, const Annotation*>> reps;
  std::vector<DroppedAnnotation> dropped;
  for (const auto& set : sets) {
    reps.push_back(representative_links(set));
    for (const auto& a : set.annotations) {
      const auto* link = std::get_if<ResourceLink>(&a.body);
      if (!link) {
        dropped.push_back({set.id, a.id, "not subject to majority"});
      } else if (reps.back().at(link->resource_id) != &a) {
        dropped.push_back({set.id, a.id, "surplus link to " + link->resource_id});
      }
    }
  }

  std::map<std::string, std::vector<std::size_t>> linked_by;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (const auto& [rid, a] : reps[i]) linked_by[rid].push_back(i);
  }

  std::vector<Candidate> candidates;
  for (const auto& [rid, set_indices] : linked_by) {
    const auto count = static_cast<int>(set_indices.size());
    if (count < quorum) {
      for (auto i : set_indices) {
        dropped.push_back({sets[i].id, reps[i].at(rid)->id,
                           "below quorum (" + std::to_string(count) + " of " +
                               std::to_string(quorum) + " required sets)"});
      }
      continue;
    }
    std::vector<TimeFragment> fragments;
    std::vector<std::string> tags;
    Candidate c;
    const Annotation* base = nullptr;
    Timestamp latest;
    for (auto i : set_indices) {
      const Annotation* a = reps[i].at(rid);
      fragments.push_back(a->fragment);
      tags.insert(tags.end(), a->tags.begin(), a->tags.end());
      c.sources.push_back({sets[i].id, a->id});
      if (!base || a->created < base->created) base = a;
      latest = std::max(latest, a->modified);
    }
    c.annotation = *base;
    c.annotation.fragment = median_fragment(fragments);
    c.annotation.modified = std::max(latest, base->created);
    c.annotation.tags = normalize_tags(tags);
    candidates.push_back(std::move(c));
  }
  return finish(std::move(candidates), std::move(dropped));
}

MergeResult merge_manual(std::span<const AnnotationSet> sets, const ManualPolicy& policy) {
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < policy.selected.size(); ++k) {
    const auto& ref = policy.selected[k];
    bool found = false;
    for (std::size_t i = 0; i < sets.size() && !found; ++i) {
      if (sets[i].id != ref.set_id) continue;
      const auto& anns = sets[i].annotations;
      for (std::size_t j = 0; j < anns.size(); ++j) {
        if (anns[j].id != ref.annotation_id) continue;
        found = true;
        if (chosen.emplace(i, j).second) candidates.push_back({anns[j], {ref}});
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::kUnknownTarget,
                  "unknown selection " + ref.set_id + "/" + ref.annotation_id,
                  "policy.selected[" + std::to_string(k) + "]");
    }
  }
  std::vector<DroppedAnnotation> dropped;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < sets[i].annotations.size(); ++j) {
      if (!chosen.contains({i, j})) {
        dropped.push_back({sets[i].id, sets[i].annotations[j].id, "not selected"});
      }
    }
  }
  return finish(std::move(candidates), std::move(dropped));
}

}  // namespace

std::map<std::string, const Annotation*> representative_links(const AnnotationSet& set) {
  std::map<std::string, const Annotation*> reps;
  for (const auto& a : set.annotations) {
    const auto* link = std::get_if<ResourceLink>(&a.body);
    if (!link) continue;
    auto [it, inserted] = reps.emplace(link->resource_id, &a);
    if (!inserted && timeline_less(a, *it->second)) it->second = &a;
  }
  return reps;
}

DiffReport diff_pair(const AnnotationSet& a, const AnnotationSet& b, Millis tolerance_ms) {
  if (a.video_id != b.video_id) {
    throw Error(ErrorCode::kVideoMismatch,
                "sets annotate different videos: " + a.video_id + " vs " + b.video_id);
  }
  if (tolerance_ms < 0) throw Error(ErrorCode::kInvalidRequest, "negative tolerance");

  const auto reps_a = representative_links(a);
  const auto reps_b = representative_links(b);

  DiffReport report;
  report.tolerance_ms = tolerance_ms;
  for (const auto& [rid, la] : reps_a) {
    const auto it = reps_b.find(rid);
    if (it == reps_b.end()) continue;
    const Annotation& lb = *it->second;
    const Millis db = lb.fragment.begin_ms - la->fragment.begin_ms;
    const Millis de = lb.fragment.end_ms - la->fragment.end_ms;
    if (std::abs(db) <= tolerance_ms && std::abs(de) <= tolerance_ms) {
      report.agreements.push_back({rid, *la, lb});
    } else {
      report.disagreements.push_back({rid, *la, lb, db, de});
    }
  }

  auto uniques = [](const AnnotationSet& self, const std::map<std::string, const Annotation*>& mine,
                    const std::map<std::string, const Annotation*>& theirs) {
    std::vector<Annotation> out;
    for (const auto& x : self.annotations) {
      const auto* link = std::get_if<ResourceLink>(&x.body);
      const bool paired =
          link && mine.at(link->resource_id) == &x && theirs.contains(link->resource_id);
      if (!paired) out.push_back(x);
    }
    std::stable_sort(out.begin(), out.end(), timeline_less);
    return out;
  };
  report.unique_a = uniques(a, reps_a, reps_b);
  report.unique_b = uniques(b, reps_b, reps_a);
  return report;
}

TimeFragment median_fragment(std::span<const TimeFragment> fragments) {
  if (fragments.empty()) {
    throw Error(ErrorCode::kInvalidRequest, "median of an empty fragment list");
  }
  std::vector<Millis> begins;
  std::vector<Millis> ends;
  for (const auto& f : fragments) {
    begins.push_back(f.begin_ms);
    ends.push_back(f.end_ms);
  }
  TimeFragment out{median_of(std::move(begins)), median_of(std::move(ends))};
  if (out.begin_ms > out.end_ms) out.end_ms = out.begin_ms;
  return out;
}

MergeResult merge(std::span<const AnnotationSet> sets, const MergePolicy& policy) {
  if (sets.empty()) throw Error(ErrorCode::kInvalidRequest, "merge needs at least one set");
  require_same_video(sets);
  if (std::holds_alternative<UnionPolicy>(policy)) return merge_union(sets);
  if (const auto* m = std::get_if<MajorityPolicy>(&policy)) {
    if (m->quorum < 1 || m->quorum > static_cast<int>(sets.size())) {
      throw Error(ErrorCode::kInvalidRequest,
                  "quorum " + std::to_string(m->quorum) + " outside [1, " +
                      std::to_string(sets.size()) + "]",
                  "policy.quorum");
    }
    return merge_majority(sets, m->quorum);
  }
  return merge_manual(sets, std::get<ManualPolicy>(policy));
}

GradeReport grade(const AnnotationSet& learner, const AnnotationSet& key, Millis tolerance_ms) {
  if (learner.video_id != key.video_id) {
    throw Error(ErrorCode::kVideoMismatch,
                "learner and key annotate different videos: " + learner.video_id + " vs " +
                    key.video_id);
  }
  if (tolerance_ms < 0) throw Error(ErrorCode::kInvalidRequest, "negative tolerance");
  for (std::size_t i = 0; i < key.annotations.size(); ++i) {
    if (!std::holds_alternative<ResourceLink>(key.annotations[i].body)) {
      throw Error(ErrorCode::kValidationFailed, "key may only contain resource links",
                  "annotations[" + std::to_string(i) + "].body");
    }
  }

  const auto key_reps = representative_links(key);
  const auto learner_reps = representative_links(learner);
  GradeReport report;
  report.total = static_cast<int>(key_reps.size());
  for (const auto& [rid, expected] : key_reps) {
    const auto it = learner_reps.find(rid);
    if (it == learner_reps.end()) {
      report.missing.push_back(rid);
      continue;
    }
    const Millis delta = it->second->fragment.begin_ms - expected->fragment.begin_ms;
    if (std::abs(delta) <= tolerance_ms) {
      ++report.correct;
    } else {
      report.misplaced.push_back({rid, delta});
    }
  }
  report.score = report.total == 0 ? 1.0 : static_cast<double>(report.correct) / report.total;
  return report;
}

}  // namespace hyvid
