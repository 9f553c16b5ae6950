#include "hyvid/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hyvid/collab.hpp"
#include "hyvid/interchange.hpp"
#include "hyvid/json_codec.hpp"
#include "hyvid/service.hpp"
#include "hyvid/store.hpp"

namespace hyvid::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "cannot read " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << bytes;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
}

ImportedSet load_set(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return import_set_json(bytes);
  } catch (const Error& e) {
    if (!e.violations().empty()) throw;
    throw Error(e.code(), path + ": " + e.message(), e.path());
  }
}

void report(const Error& e, std::ostream& err) {
  if (!e.violations().empty()) {
    for (const auto& v : e.violations()) err << v.path << ": " << v.message << '\n';
    return;
  }
  err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
}

MergePolicy parse_policy(const std::string& spec) {
  if (spec == "union") return UnionPolicy{};
  if (spec.rfind("majority:", 0) == 0) {
    const auto digits = spec.substr(9);
    if (digits.empty() || digits.size() > 9 ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
      throw CLI::ValidationError("--policy", "majority quorum must be a positive integer");
    }
    const int q = std::stoi(digits);
    if (q < 1) throw CLI::ValidationError("--policy", "majority quorum must be >= 1");
    return MajorityPolicy{q};
  }
  if (spec.rfind("manual:", 0) == 0) {
    const auto j = parse_json(read_file(spec.substr(7)));
    if (j.is_array()) return decode_merge_policy({{"kind", "manual"}, {"selected", j}}, "selection");
    return decode_merge_policy(j, "selection");
  }
  throw CLI::ValidationError("--policy", "expected union, majority:<q> or manual:<file>");
}

std::string fragment_text(const TimeFragment& f) {
  return "[" + std::to_string(f.begin_ms) + "," + std::to_string(f.end_ms) + "]";
}

std::string diff_text(const DiffReport& d) {
  std::ostringstream out;
  out << "tolerance " << d.tolerance_ms << " ms\n";
  out << "agreements: " << d.agreements.size() << '\n';
  for (const auto& a : d.agreements) {
    out << "  " << a.resource_id << "  a" << fragment_text(a.a.fragment) << "  b"
        << fragment_text(a.b.fragment) << '\n';
  }
  out << "disagreements: " << d.disagreements.size() << '\n';
  for (const auto& x : d.disagreements) {
    out << "  " << x.resource_id << "  a" << fragment_text(x.a.fragment) << "  b"
        << fragment_text(x.b.fragment) << "  begin " << std::showpos << x.delta_begin_ms
        << " end " << x.delta_end_ms << std::noshowpos << '\n';
  }
  for (const auto* side : {&d.unique_a, &d.unique_b}) {
    out << (side == &d.unique_a ? "only in a: " : "only in b: ") << side->size() << '\n';
    for (const auto& a : *side) {
      out << "  " << a.id << "  " << fragment_text(a.fragment) << "  " << body_kind(a.body) << ": "
          << body_text(a.body) << '\n';
    }
  }
  return out.str();
}

int serve(const ServiceConfig& config, const std::string& data_dir, std::ostream& out) {
  auto store = Store::open(data_dir);
  for (const auto& v : store->corruption()) {
    std::cerr << "corrupt: " << v.path << ": " << v.message << '\n';
  }
  if (store->read_only()) std::cerr << "store opened read-only\n";

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(*store, config);
  const int port = service.bind();
  out << "listening on " << config.host << ":" << port << std::endl;
  std::thread server([&] { service.run(); });
  int sig = 0;
  sigwait(&signals, &sig);
  service.stop();
  server.join();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-based video annotation sets: validate, convert, compare, merge, grade, serve."};
  app.name("hyvid");
  app.require_subcommand(1);

  std::string input, second;
  std::vector<std::string> inputs;
  std::string format, out_path, policy_spec, set_id = "merged", owner = "merge";
  std::string data_dir, host = "0.0.0.0", static_dir;
  bool pretty = false, private_sets = false;
  Millis padding = kDefaultPointPaddingMs, tolerance = kDefaultToleranceMs;
  std::optional<std::int64_t> at;
  int port = kDefaultPort;
  std::string user_id, user_name, user_role, user_token;

  auto* validate = app.add_subcommand("validate", "Check a set document; violations go to stderr");
  validate->add_option("set", input, "Set document")->required();

  auto* exp = app.add_subcommand("export", "Convert a set document");
  exp->add_option("set", input, "Set document")->required();
  format = "json";
  exp->add_option("--format", format, "json, webvtt or csv")
      ->check(CLI::IsMember({"json", "webvtt", "csv"}));
  exp->add_flag("--pretty", pretty, "Indent JSON output");
  exp->add_option("--point-padding-ms", padding, "Cue length for point annotations")
      ->check(CLI::NonNegativeNumber);

  auto* diff = app.add_subcommand("diff", "Compare two sets");
  diff->add_option("a", input, "First set")->required();
  diff->add_option("b", second, "Second set")->required();
  diff->add_option("--tolerance-ms", tolerance)->check(CLI::NonNegativeNumber);
  std::string diff_format = "json";
  diff->add_option("--format", diff_format, "json or text")->check(CLI::IsMember({"json", "text"}));

  auto* mrg = app.add_subcommand("merge", "Consolidate sets into one");
  mrg->add_option("--policy", policy_spec, "union, majority:<q> or manual:<selection.json>")
      ->required();
  mrg->add_option("--out", out_path, "Where to write the merged set document")->required();
  mrg->add_option("--set-id", set_id, "Id of the merged set");
  mrg->add_option("--owner", owner, "Owner of the merged set");
  mrg->add_option("inputs", inputs, "Set documents")->required();

  auto* grd = app.add_subcommand("grade", "Score a learner set against a key");
  grd->add_option("learner", input, "Learner set")->required();
  grd->add_option("key", second, "Key set")->required();
  grd->add_option("--tolerance-ms", tolerance)->check(CLI::NonNegativeNumber);

  auto* hist = app.add_subcommand("history", "Print the state replayed from a revision log");
  hist->add_option("log", input, "Revision log")->required();
  hist->add_option("--at", at, "Revision to replay up to (default: all)");

  auto* srv = app.add_subcommand("serve", "Run the HTTP API");
  if (const char* env = std::getenv("HYVID_PORT")) {
    try {
      port = std::stoi(env);
    } catch (const std::exception&) {
      err << "HYVID_PORT is not a number\n";
      return kUsageError;
    }
  }
  if (const char* env = std::getenv("HYVID_DATA_DIR")) data_dir = env;
  srv->add_option("--port", port)->check(CLI::Range(0, 65535));
  srv->add_option("--host", host);
  srv->add_option("--data-dir", data_dir);
  srv->add_flag("--private-sets", private_sets, "Learners read only their own and teachers' sets");
  srv->add_option("--static-dir", static_dir, "Directory served at /");

  auto* user = app.add_subcommand("user-add", "Register a user in a data directory");
  user->add_option("--data-dir", data_dir)->required();
  user->add_option("--id", user_id)->required();
  user->add_option("--role", user_role)->required()->check(
      CLI::IsMember({"teacher", "learner", "viewer"}));
  user->add_option("--token", user_token)->required();
  user->add_option("--name", user_name);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'hyvid --help' for usage\n";
    return kUsageError;
  }

  try {
    if (*validate) {
      const auto imported = load_set(input);
      if (imported.reordered) err << "note: annotations are not in timeline order\n";
      return kOk;
    }
    if (*exp) {
      const auto s = load_set(input);
      if (format == "json") {
        const auto doc = export_set_json(s.set, s.video);
        out << (pretty ? pretty_json(doc) : doc);
      } else if (format == "webvtt") {
        out << export_webvtt(s.set, s.video, padding);
      } else {
        out << export_csv(s.set, s.video);
      }
      return kOk;
    }
    if (*diff) {
      const auto report = diff_pair(load_set(input).set, load_set(second).set, tolerance);
      out << (diff_format == "text" ? diff_text(report) : canonical(encode(report)));
      return kOk;
    }
    if (*mrg) {
      MergePolicy policy;
      try {
        policy = parse_policy(policy_spec);
      } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
      }
      std::vector<AnnotationSet> sets;
      std::optional<VideoReference> video;
      for (const auto& path : inputs) {
        auto s = load_set(path);
        if (video && s.video != *video) {
          throw Error(ErrorCode::kVideoMismatch, path + " annotates a different video");
        }
        video = s.video;
        sets.push_back(std::move(s.set));
      }
      const auto result = merge(sets, policy);
      AnnotationSet merged;
      merged.id = set_id;
      merged.owner = owner;
      merged.video_id = video->id;
      merged.annotations = result.merged;
      write_file(out_path, export_set_json(merged, *video));
      out << canonical(encode(result));
      return kOk;
    }
    if (*grd) {
      out << canonical(encode(grade(load_set(input).set, load_set(second).set, tolerance)));
      return kOk;
    }
    if (*hist) {
      const auto log = decode_revision_log(parse_json(read_file(input)));
      out << canonical(encode_replay(log, at.value_or(static_cast<std::int64_t>(log.size()))));
      return kOk;
    }
    if (*srv) {
      if (data_dir.empty()) {
        err << "usage error: --data-dir (or HYVID_DATA_DIR) is required\n";
        return kUsageError;
      }
      ServiceConfig config;
      config.host = host;
      config.port = port;
      config.private_sets = private_sets;
      if (!static_dir.empty()) config.static_dir = static_dir;
      return serve(config, data_dir, out);
    }
    if (*user) {
      auto store = Store::open(data_dir);
      store->put_user({user_id, user_name.empty() ? user_id : user_name,
                       *role_from_string(user_role), user_token});
      return kOk;
    }
  } catch (const Error& e) {
    report(e, err);
    return e.code() == ErrorCode::kIo ? kIoError : kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kUsageError;
}

}  // namespace hyvid::cli
