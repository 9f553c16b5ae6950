#include "doctest.h"

#include <fstream>
#include <sstream>

#include "hyvid/cli.hpp"
#include "hyvid/collab.hpp"
#include "hyvid/interchange.hpp"
#include "support/tempdir.hpp"

using namespace hyvid;
using namespace hyvid::testing;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const VideoReference kVideo{"v1", "https://x/v.mp4", 600000, "Lecture"};

Annotation link(const std::string& id, const std::string& resource, Millis b, Millis e) {
  Annotation a;
  a.id = id;
  a.author = "u";
  a.created = a.modified = Timestamp::parse("2024-05-01T10:00:00Z");
  a.fragment = {b, e};
  a.body = ResourceLink{resource, std::nullopt};
  return a;
}

std::string write(const TempDir& dir, const std::string& name, const std::string& bytes) {
  const auto path = (dir.path() / name).string();
  std::ofstream(path, std::ios::binary) << bytes;
  return path;
}

std::string write_set(const TempDir& dir, const std::string& id, std::vector<Annotation> as) {
  return write(dir, id + ".json", export_set_json({id, "v1", "owner-" + id, std::move(as), 0}, kVideo));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("validate reports the failing fragment") {
  TempDir dir;
  auto doc = parse_json(export_set_json({"s", "v1", "o", {link("a", "r1", 1, 2)}, 0}, kVideo));
  doc["annotations"][0]["fragment"] = {{"begin_ms", 20}, {"end_ms", 10}};
  const auto bad = write(dir, "bad.json", doc.dump());
  auto r = run({"validate", bad});
  CHECK(r.code == cli::kDomainError);
  CHECK(r.err.find("annotations[0].fragment") != std::string::npos);

  r = run({"validate", write_set(dir, "ok", {link("a", "r1", 1, 2)})});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.empty());
}

TEST_CASE("exit codes for usage and I/O errors") {
  CHECK(run({}).code == cli::kUsageError);
  CHECK(run({"frobnicate"}).code == cli::kUsageError);
  CHECK(run({"export"}).code == cli::kUsageError);
  CHECK(run({"export", "x.json", "--format", "srt"}).code == cli::kUsageError);
  CHECK(run({"export", "/nonexistent/x.json"}).code == cli::kIoError);
  CHECK(run({"--help"}).code == cli::kOk);
  TempDir dir;
  const auto s = write_set(dir, "a", {});
  CHECK(run({"merge", "--policy", "majority:zero", "--out", (dir.path() / "m.json").string(), s}).code ==
        cli::kUsageError);
  CHECK(run({"merge", "--policy", "union", "--out", "/nonexistent/dir/m.json", s}).code == cli::kIoError);
  CHECK(run({"validate", write(dir, "junk.json", "{")}).code == cli::kDomainError);
}

TEST_CASE("export formats") {
  TempDir dir;
  const auto path = write_set(dir, "a", {link("x", "r1", 5000, 5000)});
  auto r = run({"export", path, "--format", "webvtt", "--point-padding-ms", "250"});
  CHECK(r.code == 0);
  CHECK(r.out == "WEBVTT\n\nx\n00:00:05.000 --> 00:00:05.250\n[resource] r1\n\n");

  r = run({"export", path});
  CHECK(r.out == slurp(path));
  const auto pretty = run({"export", path, "--pretty"}).out;
  CHECK(pretty != r.out);
  CHECK(canonical_envelope(parse_json(pretty)) == r.out);

  CHECK(run({"export", path, "--format", "csv"}).out.find("x,5000,5000,u,resource,r1,\r\n") !=
        std::string::npos);
}

TEST_CASE("merge union of a file with itself") {
  TempDir dir;
  const auto a = write_set(dir, "a", {link("x", "r1", 1000, 2000), link("y", "r2", 3000, 4000)});
  const auto out = (dir.path() / "merged.json").string();
  const auto r = run({"merge", "--policy", "union", "--out", out, a, a});
  REQUIRE(r.code == 0);
  const auto result = parse_json(r.out);
  CHECK(result["merged"].size() == 2);
  CHECK(result["provenance"]["m1"].size() == 2);
  const auto merged = import_set_json(slurp(out));
  CHECK(merged.set.annotations.size() == 2);
  CHECK(merged.set.id == "merged");
  CHECK(merged.video == kVideo);
}

TEST_CASE("merge output matches the engine byte for byte") {
  TempDir dir;
  const std::vector<AnnotationSet> sets = {
      {"a", "v1", "oa", {link("x", "r1", 10000, 20000)}, 0},
      {"b", "v1", "ob", {link("y", "r1", 12000, 22000), link("z", "r2", 0, 0)}, 0},
  };
  const auto pa = write(dir, "a.json", export_set_json(sets[0], kVideo));
  const auto pb = write(dir, "b.json", export_set_json(sets[1], kVideo));
  const auto out = (dir.path() / "m.json").string();
  auto r = run({"merge", "--policy", "majority:2", "--out", out, "--set-id", "g", "--owner", "t", pa, pb});
  REQUIRE(r.code == 0);
  CHECK(r.out == canonical(encode(merge(sets, MajorityPolicy{2}))));
  CHECK(parse_json(r.out)["merged"][0]["fragment"]["begin_ms"] == 11000);

  const auto sel = write(dir, "sel.json", R"([{"set_id":"b","annotation_id":"z"}])");
  r = run({"merge", "--policy", "manual:" + sel, "--out", out, pa, pb});
  REQUIRE(r.code == 0);
  CHECK(r.out == canonical(encode(merge(sets, ManualPolicy{{{"b", "z"}}}))));

  r = run({"diff", pa, pb, "--tolerance-ms", "2000"});
  CHECK(r.out == canonical(encode(diff_pair(sets[0], sets[1], 2000))));
  r = run({"diff", pa, pb, "--format", "text"});
  CHECK(r.out.find("agreements: 1") != std::string::npos);
}

TEST_CASE("grade at two tolerances") {
  TempDir dir;
  const auto key = write_set(dir, "key", {link("k", "r1", 10000, 10000)});
  const auto learner = write_set(dir, "learner", {link("l", "r1", 13000, 15000)});
  auto r = run({"grade", learner, key, "--tolerance-ms", "5000"});
  REQUIRE(r.code == 0);
  CHECK(parse_json(r.out)["score"] == 1.0);
  r = run({"grade", learner, key, "--tolerance-ms", "2000"});
  CHECK(parse_json(r.out)["score"] == 0.0);
  CHECK(parse_json(r.out)["misplaced"][0]["delta_begin_ms"] == 3000);
}

TEST_CASE("history replays a log") {
  TempDir dir;
  RevisionLog log{"s1", {}};
  for (const auto& a : {link("a", "r1", 0, 1), link("b", "r1", 5, 6)}) {
    RevisionEntry e;
    e.actor = "u";
    e.op = RevisionOp::kAdd;
    e.annotation_id = a.id;
    e.after = a;
    log = append_revision(log, e);
  }
  const auto path = write(dir, "log.json", canonical_envelope(encode(log)));
  auto r = run({"history", path, "--at", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out == canonical(encode_replay(log, 1)));
  CHECK(parse_json(run({"history", path}).out)["annotations"].size() == 2);
  CHECK(run({"history", path, "--at", "7"}).code == cli::kDomainError);
}

TEST_CASE("inputs are not modified") {
  TempDir dir;
  const auto a = write_set(dir, "a", {link("x", "r1", 1000, 2000)});
  const auto before = slurp(a);
  run({"export", a, "--format", "csv"});
  run({"diff", a, a});
  run({"grade", a, a});
  run({"merge", "--policy", "union", "--out", (dir.path() / "o.json").string(), a});
  CHECK(slurp(a) == before);
}

TEST_CASE("user-add registers users") {
  TempDir dir;
  const auto data = (dir.path() / "data").string();
  CHECK(run({"user-add", "--data-dir", data, "--id", "t1", "--role", "teacher", "--token", "x"}).code == 0);
  CHECK(run({"user-add", "--data-dir", data, "--id", "t1", "--role", "teacher", "--token", "y"}).code ==
        cli::kDomainError);
  CHECK(run({"user-add", "--data-dir", data, "--id", "t2", "--role", "king", "--token", "z"}).code ==
        cli::kUsageError);
}
