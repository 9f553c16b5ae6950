// Acceptance checks A1-A7. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
// Usage: acceptance <path-to-hyvid-cli>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "hyvid/collab.hpp"
#include "hyvid/interchange.hpp"
#include "hyvid/media_fragment.hpp"
#include "hyvid/store.hpp"
#include "support/gen.hpp"
#include "support/live_service.hpp"
#include "support/oracles.hpp"

using namespace hyvid;
using namespace hyvid::testing;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr int kA1Sets = 1000;
constexpr double kA1MaxSeconds = 10.0;
constexpr int kA2Directives = 10000;
constexpr double kA2FuzzSeconds = 60.0;
constexpr int kA3Instances = 10000;
constexpr int kA3MaxSets = 4;
constexpr int kA3MaxResources = 5;
constexpr Millis kA3GridMs = 10000;
constexpr int kA4Cases = 1000;
constexpr int kA5Logs = 500;
constexpr int kA5MaxEntries = 200;
constexpr int kA6Cases = 1000;
constexpr double kA7MaxSeconds = 30.0;

std::string g_cli;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Failures {
 public:
  void add(const std::string& what) {
    if (count_++ < 3) first_ += (first_.empty() ? "" : "; ") + what;
  }
  bool any() const { return count_ > 0; }
  std::string summary() const { return std::to_string(count_) + " failure(s): " + first_; }

 private:
  int count_ = 0;
  std::string first_;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", s);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome a1_round_trip() {
  Rng rng(1001);
  Failures f;
  const auto start = Clock::now();
  for (int i = 0; i < kA1Sets; ++i) {
    const auto video = random_video(rng, "v" + std::to_string(i));
    const auto ids = resource_ids(static_cast<std::size_t>(uniform(rng, 0, 6)));
    const auto s = random_set(rng, video, ids, 60, "s" + std::to_string(i), "owner" + std::to_string(i % 7));
    const auto bytes = export_set_json(s, video);
    if (export_set_json(s, video) != bytes) f.add("non-deterministic export of set " + s.id);
    const auto back = import_set_json(bytes);
    if (!(back.set == s) || !(back.video == video)) f.add("round trip changed set " + s.id);
  }
  const auto elapsed = seconds_since(start);
  if (elapsed >= kA1MaxSeconds) f.add("runtime " + fmt_seconds(elapsed));
  if (f.any()) return {false, f.summary()};
  return {true, std::to_string(kA1Sets) + " sets, " + fmt_seconds(elapsed) + " (limit " +
                    fmt_seconds(kA1MaxSeconds) + ")"};
}

// ---------------------------------------------------------------------------

FragmentDirective random_directive(Rng& rng) {
  FragmentDirective d;
  const auto shape = uniform(rng, 0, 2);
  if (shape != 1) {
    const auto b = uniform(rng, 0, 50'000'000);
    if (chance(rng, 0.15)) {
      d.temporal = TimeFragment{b, kOpenEnd};
    } else {
      d.temporal = TimeFragment{b, chance(rng, 0.2) ? b : b + uniform(rng, 0, 9'000'000)};
    }
  }
  if (shape != 0) d.spatial = random_region(rng);
  return d;
}

std::string fuzz_input(Rng& rng, const std::vector<std::string>& seeds) {
  static const std::vector<std::string> tokens = {
      "t=", "xywh=", "npt:", "pixel:", "percent:", ",", "&", ":", ".", "=", "0", "1", "59", "60",
      "99", "100", "00", "9999999999999999999", "-", "#", " ", "%20", "\xff", "\xc3\xa9", "\0",
      "t", "x", "smpte:", "1:02:03.5", ".0005"};
  std::string s;
  switch (uniform(rng, 0, 3)) {
    case 0:  // token soup
      for (auto n = uniform(rng, 0, 12); n > 0; --n) s += pick(rng, tokens);
      break;
    case 1:  // random bytes
      for (auto n = uniform(rng, 0, 40); n > 0; --n) s += static_cast<char>(uniform(rng, 0, 255));
      break;
    default: {  // mutated valid string
      s = pick(rng, seeds);
      for (auto n = uniform(rng, 1, 4); n > 0; --n) {
        const auto pos = static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(s.size())));
        switch (uniform(rng, 0, 3)) {
          case 0:
            s.insert(pos, pick(rng, tokens));
            break;
          case 1:
            if (pos < s.size()) s.erase(pos, static_cast<std::size_t>(uniform(rng, 1, 3)));
            break;
          case 2:
            if (pos < s.size()) s[pos] = static_cast<char>(uniform(rng, 32, 126));
            break;
          default:
            s += pick(rng, tokens);
        }
      }
    }
  }
  return s;
}

Outcome a2_fragment_grammar() {
  Rng rng(2002);
  Failures f;
  std::vector<std::string> seeds;
  for (int i = 0; i < kA2Directives; ++i) {
    const auto d = random_directive(rng);
    const auto s = serialize_fragment(d);
    try {
      const auto back = parse_fragment_string(s);
      if (!(back == d)) f.add("round trip changed " + s);
      if (serialize_fragment(back) != s) f.add("not idempotent on " + s);
    } catch (const Error& e) {
      f.add("rejected own output " + s + ": " + e.what());
    }
    if (seeds.size() < 500) seeds.push_back(s);
  }

  std::int64_t runs = 0, accepted = 0;
  const auto start = Clock::now();
  while (seconds_since(start) < kA2FuzzSeconds) {
    for (int batch = 0; batch < 1000; ++batch, ++runs) {
      const auto input = fuzz_input(rng, seeds);
      try {
        const auto once = serialize_fragment(parse_fragment_string(input));
        ++accepted;
        const auto twice = serialize_fragment(parse_fragment_string(once));
        if (twice != once) f.add("serialize/parse not idempotent from input '" + input + "'");
      } catch (const Error&) {
      } catch (const std::exception& e) {
        f.add(std::string("unstructured exception: ") + e.what());
      }
      try {
        parse_npt_time(input);
      } catch (const Error&) {
      } catch (const std::exception& e) {
        f.add(std::string("unstructured exception from npt: ") + e.what());
      }
    }
  }
  if (f.any()) return {false, f.summary()};
  return {true, std::to_string(kA2Directives) + " round trips; fuzz " + fmt_seconds(seconds_since(start)) +
                    ", " + std::to_string(runs) + " inputs (" + std::to_string(accepted) +
                    " accepted), no crashes"};
}

// ---------------------------------------------------------------------------

AnnotationSet grid_set(Rng& rng, const std::string& id, int resources) {
  AnnotationSet s{id, "v1", "owner-" + id, {}, 0};
  const auto n = uniform(rng, 0, 6);
  for (int k = 0; k < n; ++k) {
    Annotation a;
    a.id = "a" + std::to_string(k);
    a.author = s.owner;
    a.created = a.modified = Timestamp{1'700'000'000'000LL + uniform(rng, 0, 1000)};
    const auto begin = uniform(rng, 0, 9) * kA3GridMs;
    a.fragment = {begin, begin + uniform(rng, 0, 3) * kA3GridMs};
    if (chance(rng, 0.15)) {
      a.body = Comment{"thought " + std::to_string(k)};
    } else {
      a.body = ResourceLink{"r" + std::to_string(uniform(rng, 1, resources)), std::nullopt};
    }
    s.annotations.push_back(a);
  }
  s.annotations = sort_timeline(s.annotations);
  return s;
}

Outcome a3_merge_oracle() {
  Rng rng(3003);
  Failures f;
  int mismatches = 0;
  for (int i = 0; i < kA3Instances; ++i) {
    const auto n = static_cast<int>(uniform(rng, 1, kA3MaxSets));
    const auto resources = static_cast<int>(uniform(rng, 1, kA3MaxResources));
    std::vector<AnnotationSet> sets;
    for (int k = 0; k < n; ++k) sets.push_back(grid_set(rng, "s" + std::to_string(k), resources));
    const int quorum = static_cast<int>(uniform(rng, 1, n));

    const auto result = merge(sets, MajorityPolicy{quorum});
    std::vector<OracleLink> got;
    for (const auto& a : result.merged) {
      got.push_back({std::get<ResourceLink>(a.body).resource_id, a.fragment});
    }
    std::sort(got.begin(), got.end());
    if (got != brute_majority(sets, quorum)) {
      ++mismatches;
      f.add("instance " + std::to_string(i) + " differs from oracle");
    }
    // Every input annotation is accounted for exactly once.
    std::multiset<std::pair<std::string, std::string>> seen;
    for (const auto& [id, refs] : result.provenance) {
      for (const auto& r : refs) seen.insert({r.set_id, r.annotation_id});
    }
    for (const auto& d : result.dropped) seen.insert({d.set_id, d.annotation_id});
    std::multiset<std::pair<std::string, std::string>> inputs;
    for (const auto& s : sets) {
      for (const auto& a : s.annotations) inputs.insert({s.id, a.id});
    }
    if (seen != inputs) f.add("instance " + std::to_string(i) + " loses or repeats inputs");
  }
  if (f.any()) return {false, std::to_string(mismatches) + " oracle mismatches; " + f.summary()};
  return {true, std::to_string(kA3Instances) + " instances, 0 mismatches"};
}

// ---------------------------------------------------------------------------

Outcome a4_diff_partition() {
  Rng rng(4004);
  Failures f;
  const VideoReference video{"v1", "https://x/v.mp4", 120'000, "V"};
  for (int i = 0; i < kA4Cases; ++i) {
    const auto a = random_set(rng, video, resource_ids(5), 12, "a");
    const auto b = random_set(rng, video, resource_ids(5), 12, "b");
    const auto tol = uniform(rng, 0, 30'000);
    const auto ab = diff_pair(a, b, tol);
    const auto ba = diff_pair(b, a, tol);
    const std::string tag = "case " + std::to_string(i);

    std::map<std::string, int> hits_a, hits_b;
    for (const auto& x : ab.agreements) ++hits_a[x.a.id], ++hits_b[x.b.id];
    for (const auto& x : ab.disagreements) {
      ++hits_a[x.a.id], ++hits_b[x.b.id];
      const auto db = x.delta_begin_ms, de = x.delta_end_ms;
      if (db != x.b.fragment.begin_ms - x.a.fragment.begin_ms || (std::abs(db) <= tol && std::abs(de) <= tol)) {
        f.add(tag + ": bad disagreement " + x.resource_id);
      }
    }
    for (const auto& x : ab.unique_a) ++hits_a[x.id];
    for (const auto& x : ab.unique_b) ++hits_b[x.id];
    for (const auto& x : a.annotations) {
      if (hits_a[x.id] != 1) f.add(tag + ": a." + x.id + " in " + std::to_string(hits_a[x.id]) + " categories");
    }
    for (const auto& x : b.annotations) {
      if (hits_b[x.id] != 1) f.add(tag + ": b." + x.id + " in " + std::to_string(hits_b[x.id]) + " categories");
    }
    if (2 * (ab.agreements.size() + ab.disagreements.size()) + ab.unique_a.size() + ab.unique_b.size() !=
        a.annotations.size() + b.annotations.size()) {
      f.add(tag + ": partition count");
    }

    bool mirrored = ab.agreements.size() == ba.agreements.size() &&
                    ab.disagreements.size() == ba.disagreements.size() && ab.unique_a == ba.unique_b &&
                    ab.unique_b == ba.unique_a;
    for (std::size_t k = 0; mirrored && k < ab.agreements.size(); ++k) {
      const auto &x = ab.agreements[k], &y = ba.agreements[k];
      mirrored = x.resource_id == y.resource_id && x.a == y.b && x.b == y.a;
    }
    for (std::size_t k = 0; mirrored && k < ab.disagreements.size(); ++k) {
      const auto &x = ab.disagreements[k], &y = ba.disagreements[k];
      mirrored = x.resource_id == y.resource_id && x.a == y.b && x.b == y.a &&
                 x.delta_begin_ms == -y.delta_begin_ms && x.delta_end_ms == -y.delta_end_ms;
    }
    if (!mirrored) f.add(tag + ": not mirrored");

    const auto o = brute_diff(a, b, tol);
    if (o.agree.size() != ab.agreements.size() || o.disagree.size() != ab.disagreements.size()) {
      f.add(tag + ": differs from pairing oracle");
    }
  }
  if (f.any()) return {false, f.summary()};
  return {true, std::to_string(kA4Cases) + " cases partitioned and mirrored"};
}

// ---------------------------------------------------------------------------

struct Crash {};

Outcome a5_revision_replay() {
  Rng rng(5005);
  Failures f;
  TempDir dir;
  const VideoReference video{"v1", "https://x/v.mp4", 900'000, "V"};
  const auto ids = resource_ids(4);
  const auto catalog = catalog_for(ids);
  std::int64_t prefixes = 0;
  {
    auto store = Store::open(dir.path() / "replay");
    store->put_video(video);
    for (const auto& r : catalog) store->put_resource(video.id, r);
    for (int i = 0; i < kA5Logs; ++i) {
      const auto length = static_cast<std::size_t>(uniform(rng, 0, kA5MaxEntries));
      const auto log = random_log(rng, video, ids, length, "s" + std::to_string(i));
      for (std::int64_t k = 0; k <= log.size(); ++k, ++prefixes) {
        const AnnotationSet s{log.set_id, video.id, "alice", replay(log, k), k};
        if (!validate_set(s, video, catalog).empty()) {
          f.add(log.set_id + " invalid at prefix " + std::to_string(k));
          break;
        }
      }
      const AnnotationSet full{log.set_id, video.id, "alice", replay(log), 0};
      const auto revision = store->put_set(full, 0, log.entries);
      const auto stored = store->get_set(log.set_id);
      if (revision != log.size() || stored.annotations != replay(log) || stored.revision != log.size()) {
        f.add(log.set_id + ": stored set differs from replay");
      }
    }
    auto reopened = Store::open(dir.path() / "replay");
    if (reopened->read_only()) f.add("reopened store reports corruption");
    for (int i = 0; i < kA5Logs; i += 50) {
      const auto id = "s" + std::to_string(i);
      if (replay(reopened->get_log(id)) != reopened->get_set(id).annotations) f.add(id + " after reopen");
    }
  }

  // Crash between temp write and rename, at every write point, then reopen.
  int crashes = 0;
  for (const std::string point : {"set-temp-written", "log-temp-written", "log-renamed", "set-renamed"}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto root = dir.path() / ("crash-" + point + std::to_string(trial));
      bool armed = false;
      StoreOptions options;
      options.fault_hook = [&](std::string_view p) {
        if (armed && p == point) throw Crash{};
      };
      const auto log = random_log(rng, video, ids, static_cast<std::size_t>(uniform(rng, 2, 60)));
      const auto split = uniform(rng, 1, log.size() - 1);
      const std::vector<RevisionEntry> first(log.entries.begin(), log.entries.begin() + split);
      const std::vector<RevisionEntry> rest(log.entries.begin() + split, log.entries.end());
      AnnotationSet committed{"s1", video.id, "alice", replay(log, split), 0};
      {
        auto store = Store::open(root, options);
        store->put_video(video);
        for (const auto& r : catalog) store->put_resource(video.id, r);
        store->put_set(committed, 0, first);
        armed = true;
        try {
          store->put_set({"s1", video.id, "alice", replay(log), 0}, split, rest);
          f.add("fault hook did not fire at " + point);
        } catch (const Crash&) {
          ++crashes;
        }
      }
      auto reopened = Store::open(root);
      const auto s = reopened->get_set("s1");
      const auto l = reopened->get_log("s1");
      const bool committed_new = point == "log-renamed" || point == "set-renamed";
      const auto expected = committed_new ? log.size() : split;
      if (reopened->read_only() || s.revision != expected || l.size() != expected ||
          replay(l) != s.annotations || s.annotations != replay(log, expected)) {
        f.add("crash at " + point + " left an inconsistent store");
      }
    }
  }
  if (f.any()) return {false, f.summary()};
  return {true, std::to_string(kA5Logs) + " logs, " + std::to_string(prefixes) + " prefixes valid; " +
                    std::to_string(crashes) + " simulated crashes recovered"};
}

// ---------------------------------------------------------------------------

Outcome a6_grading() {
  Rng rng(6006);
  Failures f;
  const VideoReference video{"v1", "https://x/v.mp4", 300'000, "V"};
  const std::vector<Millis> tolerances = {0, 1, 500, 1000, 2000, 5000, 10000, 30000, 100000, 300000};
  for (int i = 0; i < kA6Cases; ++i) {
    auto key = random_set(rng, video, resource_ids(6), 10, "key");
    std::erase_if(key.annotations, [](const Annotation& a) { return !link_target(a); });
    if (key.annotations.empty()) {
      auto a = random_annotation(rng, video, {"r1"}, "k0", "t");
      a.body = ResourceLink{"r1", std::nullopt};
      key.annotations.push_back(a);
    }
    const auto learner = random_set(rng, video, resource_ids(6), 10, "learner");
    const std::string tag = "case " + std::to_string(i);

    if (grade(key, key, 0).score != 1.0) f.add(tag + ": self grade below 1");
    const AnnotationSet empty{"e", video.id, "x", {}, 0};
    if (grade(empty, key, 0).score != 0.0) f.add(tag + ": empty learner above 0");
    double last = -1.0;
    for (const auto t : tolerances) {
      const auto g = grade(learner, key, t);
      if (g.score < last) f.add(tag + ": score fell at tolerance " + std::to_string(t));
      if (g.score < 0.0 || g.score > 1.0) f.add(tag + ": score out of range");
      if (g.correct != brute_correct(learner, key, t)) f.add(tag + ": differs from oracle");
      last = g.score;
    }
  }
  if (f.any()) return {false, f.summary()};
  return {true, std::to_string(kA6Cases) + " instances monotone over " + std::to_string(tolerances.size()) +
                    " tolerances"};
}

// ---------------------------------------------------------------------------

std::string run_cli(const std::vector<std::string>& args, int& status) {
  std::string cmd = "'" + g_cli + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  status = pclose(pipe);
  return out;
}

Outcome a7_end_to_end() {
  Failures f;
  const auto start = Clock::now();
  LiveService live;
  auto& store = live.store();
  store.put_user({"teach", "Teacher", Role::kTeacher, "tok-teacher"});
  store.put_user({"lea", "Lea", Role::kLearner, "tok-lea"});
  store.put_user({"max", "Max", Role::kLearner, "tok-max"});
  auto teacher = live.client("tok-teacher");
  auto lea = live.client("tok-lea");
  auto max = live.client("tok-max");

  auto expect = [&](const Reply& r, int status, const std::string& step) {
    if (r.status != status) f.add(step + " -> " + std::to_string(r.status) + " " + r.body);
    return r;
  };

  expect(post(teacher, "/api/videos",
              {{"id", "entropy"}, {"title", "Entropy, flipped"}, {"uri", "https://media.example.org/entropy.mp4"},
               {"duration_ms", 600000}}),
         201, "create video");
  for (const auto& [id, kind] : std::vector<std::pair<std::string, std::string>>{
           {"r1", "image"}, {"r2", "text"}, {"r3", "web"}}) {
    expect(post(teacher, "/api/videos/entropy/resources",
                {{"id", id}, {"title", "Resource " + id}, {"kind", kind}, {"url", "https://res.example.org/" + id}}),
           201, "create resource " + id);
  }
  expect(post(lea, "/api/videos/entropy/sets", {{"id", "lea-set"}}), 201, "lea creates set");
  expect(post(max, "/api/videos/entropy/sets", {{"id", "max-set"}}), 201, "max creates set");

  auto link = [](const std::string& r, Millis b, Millis e) {
    return Json{{"body", {{"kind", "resource"}, {"resource_id", r}}}, {"fragment", {{"begin_ms", b}, {"end_ms", e}}}};
  };
  auto note = [](const std::string& text, const std::string& target) {
    return Json{{"body", {{"kind", "comment"}, {"text", text}}}, {"target", target}};
  };
  expect(post(lea, "/api/sets/lea-set/annotations", link("r1", 10000, 20000)), 201, "lea links r1");
  expect(post(lea, "/api/sets/lea-set/annotations", link("r2", 30000, 40000)), 201, "lea links r2");
  expect(post(lea, "/api/sets/lea-set/annotations", note("Why does entropy grow?", "t=15")), 201, "lea comments");
  expect(post(max, "/api/sets/max-set/annotations", link("r1", 12000, 22000)), 201, "max links r1");
  expect(post(max, "/api/sets/max-set/annotations", link("r2", 50000, 55000)), 201, "max links r2");
  expect(post(max, "/api/sets/max-set/annotations", link("r3", 599500, 600000)), 201, "max links r3");
  expect(post(max, "/api/sets/max-set/annotations", note("Compare with slide 3", "t=45,45")), 201, "max comments");
  expect(post(lea, "/api/sets/max-set/annotations", note("mine now", "t=1,2")), 403, "lea writes max's set");

  const auto diff = expect(post(lea, "/api/diff", {{"set_a", "lea-set"}, {"set_b", "max-set"}, {"tolerance_ms", 2000}}),
                           200, "diff")
                        .json();
  if (diff.value("agreements", Json::array()).size() != 1 || diff["agreements"][0]["resource_id"] != "r1") {
    f.add("diff agreements: expected r1 only");
  }
  if (diff.value("disagreements", Json::array()).size() != 1 || diff["disagreements"][0]["resource_id"] != "r2") {
    f.add("diff disagreements: expected r2 only");
  }
  if (diff.value("unique_a", Json::array()).size() != 1 || diff.value("unique_b", Json::array()).size() != 2) {
    f.add("diff uniques: expected 1 and 2");
  }

  const auto merged = expect(post(teacher, "/api/videos/entropy/merge",
                                  {{"set_ids", {"lea-set", "max-set"}},
                                   {"policy", {{"kind", "majority"}, {"quorum", 2}}},
                                   {"save_as_owner", "teach"},
                                   {"save_as_id", "group"}}),
                             201, "majority merge")
                          .json();
  const auto group = expect(get(lea, "/api/sets/group"), 200, "read merged set").json();
  std::map<std::string, Json> by_resource;
  for (const auto& a : group.value("annotations", Json::array())) by_resource[a["body"]["resource_id"]] = a["fragment"];
  if (by_resource.size() != 2 || by_resource["r1"] != Json{{"begin_ms", 11000}, {"end_ms", 21000}} ||
      by_resource["r2"] != Json{{"begin_ms", 40000}, {"end_ms", 47500}}) {
    f.add("merged set: expected r1@[11000,21000] and r2@[40000,47500], got " + group.dump());
  }
  if (!merged.contains("saved_set")) f.add("merge response lacks saved_set");

  // Export the merged set and a learner set; compare with the CLI.
  for (const std::string id : {"group", "max-set"}) {
    const auto vtt = expect(get(lea, "/api/sets/" + id + "/export?format=webvtt"), 200, "export " + id);
    if (vtt.content_type != "text/vtt") f.add(id + ": content type " + vtt.content_type);
    if (vtt.body.rfind("WEBVTT\n\n", 0) != 0) f.add(id + ": missing WEBVTT header");
    std::istringstream lines(vtt.body);
    std::string line;
    int cues = 0;
    while (std::getline(lines, line)) {
      const auto arrow = line.find(" --> ");
      if (arrow == std::string::npos) continue;
      ++cues;
      if (!(line.substr(0, arrow) < line.substr(arrow + 5))) f.add(id + ": cue does not end after start: " + line);
    }
    if (cues == 0) f.add(id + ": no cues");

    const auto doc = get(lea, "/api/sets/" + id);
    const auto path = (live.dir().path() / (id + "-export.json")).string();
    std::ofstream(path, std::ios::binary) << doc.body;
    int status = 0;
    const auto cli_vtt = run_cli({"export", path, "--format", "webvtt"}, status);
    if (status != 0) f.add("cli export exited with " + std::to_string(status));
    if (cli_vtt != vtt.body) f.add(id + ": HTTP and CLI WebVTT differ");
  }

  // CLI diff over the exported documents matches the service's diff bytes.
  {
    const auto pa = (live.dir().path() / "lea.json").string();
    const auto pb = (live.dir().path() / "max.json").string();
    std::ofstream(pa, std::ios::binary) << get(lea, "/api/sets/lea-set").body;
    std::ofstream(pb, std::ios::binary) << get(lea, "/api/sets/max-set").body;
    int status = 0;
    const auto cli_diff = run_cli({"diff", pa, pb, "--tolerance-ms", "2000"}, status);
    const auto http_diff = post(lea, "/api/diff", {{"set_a", "lea-set"}, {"set_b", "max-set"}, {"tolerance_ms", 2000}});
    if (cli_diff != http_diff.body) f.add("HTTP and CLI diff differ");
  }

  const auto elapsed = seconds_since(start);
  if (elapsed >= kA7MaxSeconds) f.add("runtime " + fmt_seconds(elapsed));
  if (f.any()) return {false, f.summary()};
  return {true, "scenario completed in " + fmt_seconds(elapsed) + " (limit " + fmt_seconds(kA7MaxSeconds) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-hyvid>\n";
    return 2;
  }
  g_cli = argv[1];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1 interchange round trip", a1_round_trip},
      {"A2 fragment grammar", a2_fragment_grammar},
      {"A3 majority merge oracle", a3_merge_oracle},
      {"A4 diff partition and mirror", a4_diff_partition},
      {"A5 revision replay and crash recovery", a5_revision_replay},
      {"A6 grading", a6_grading},
      {"A7 end-to-end scenario", a7_end_to_end},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("unexpected exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
