#include "hyvid/service.hpp"

#include <mutex>
#include <random>

#include "httplib.h"
#include "hyvid/collab.hpp"
#include "hyvid/interchange.hpp"
#include "hyvid/json_codec.hpp"
#include "hyvid/media_fragment.hpp"

namespace hyvid {
namespace {

using httplib::Request;
using httplib::Response;

constexpr const char* kJsonType = "application/json";
constexpr const char* kIdPattern = "([A-Za-z0-9_-][A-Za-z0-9._-]*)";
constexpr int kConvenienceRetries = 5;

std::string route(std::string pattern) {
  std::string out;
  for (std::size_t pos = 0; pos < pattern.size();) {
    if (pattern.compare(pos, 4, "{id}") == 0) {
      out += kIdPattern;
      pos += 4;
    } else {
      out += pattern[pos++];
    }
  }
  return out;
}

void send_json(Response& res, const std::string& body, int status = 200) {
  res.status = status;
  res.set_content(body, kJsonType);
}

void send_error(Response& res, const Error& e) {
  Json body = {{"code", to_string(e.code())}, {"message", e.message()}};
  if (!e.path().empty()) body["path"] = e.path();
  send_json(res, canonical(body), http_status(e.code()));
}

class IdMinter {
 public:
  std::string mint(std::string_view prefix) {
    std::lock_guard lock(mutex_);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(prefix);
    out += '-';
    auto bits = rng_();
    for (int i = 0; i < 12; ++i, bits >>= 4) out += kHex[bits & 0xf];
    return out;
  }

 private:
  std::mutex mutex_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace

struct Service::Impl {
  Impl(Store& store, ServiceConfig config) : store(store), config(std::move(config)) {}

  Store& store;
  ServiceConfig config;
  httplib::Server server;
  IdMinter ids;
  int port = 0;

  // -- request helpers -------------------------------------------------------

  std::optional<User> caller(const Request& req) const {
    const auto header = req.get_header_value("Authorization");
    if (header.empty()) return std::nullopt;
    constexpr std::string_view kBearer = "Bearer ";
    if (header.compare(0, kBearer.size(), kBearer) != 0) {
      throw Error(ErrorCode::kUnauthorized, "expected a Bearer token");
    }
    return store.authenticate(std::string_view(header).substr(kBearer.size()));
  }

  User require_user(const Request& req) const {
    auto user = caller(req);
    if (!user) throw Error(ErrorCode::kUnauthorized, "missing Authorization header");
    return *user;
  }

  static void require_role(const User& user, std::initializer_list<Role> roles) {
    for (auto r : roles) {
      if (user.role == r) return;
    }
    throw Error(ErrorCode::kForbiddenRole,
                "role " + std::string(to_string(user.role)) + " may not do this");
  }

  static Json body_json(const Request& req) {
    const auto type = req.get_header_value("Content-Type");
    if (!type.empty() && type.find("json") == std::string::npos) {
      throw Error(ErrorCode::kInvalidRequest, "request body must be application/json");
    }
    return parse_json(req.body);
  }

  bool can_read(const std::optional<User>& user, const AnnotationSet& set) const {
    if (!config.private_sets) return true;
    if (!user) return false;
    if (user->role == Role::kTeacher || user->id == set.owner) return true;
    try {
      return store.get_user(set.owner).role == Role::kTeacher;
    } catch (const Error&) {
      return false;
    }
  }

  AnnotationSet readable_set(const Request& req, const std::string& id) const {
    auto set = store.get_set(id);
    const auto user = caller(req);
    if (!can_read(user, set)) {
      if (!user) throw Error(ErrorCode::kUnauthorized, "sets are private; log in to read them");
      throw Error(ErrorCode::kForbiddenRole, "set " + id + " is private to its owner");
    }
    return set;
  }

  static void require_writer(const User& user, const AnnotationSet& set) {
    if (user.role == Role::kTeacher) return;
    if (user.role == Role::kLearner && user.id == set.owner) return;
    throw Error(ErrorCode::kForbiddenRole, "only the owner or a teacher may modify set " + set.id);
  }

  // A set given either by id (read access checked) or as an inline document.
  AnnotationSet set_operand(const Request& req, const Json& j, const std::string& path) const {
    if (j.is_string()) return readable_set(req, j.get<std::string>());
    if (j.is_object()) {
      try {
        return decode_set_document(j).set;
      } catch (const Error& e) {
        throw Error(e.code(), e.message(), e.path().empty() ? path : path + "." + e.path());
      }
    }
    throw Error(ErrorCode::kValidationFailed, "expected a set id or a set document", path);
  }

  // -- handlers ----------------------------------------------------------------

  void create_video(const Request& req, Response& res) {
    require_role(require_user(req), {Role::kTeacher});
    auto j = body_json(req);
    if (j.is_object() && !j.contains("id")) j["id"] = ids.mint("v");
    const auto video = decode_video(j, "");
    store.put_video(video);
    send_json(res, canonical(encode(video)), 201);
  }

  void list_videos(const Request&, Response& res) {
    Json out = Json::array();
    for (const auto& v : store.list_videos()) out.push_back(encode(v));
    send_json(res, canonical(out));
  }

  void get_video(const Request& req, Response& res) {
    send_json(res, canonical(encode(store.get_video(req.matches[1].str()))));
  }

  void create_resource(const Request& req, Response& res) {
    require_role(require_user(req), {Role::kTeacher});
    auto j = body_json(req);
    if (j.is_object() && !j.contains("id")) j["id"] = ids.mint("r");
    const auto resource = decode_resource(j, "");
    store.put_resource(req.matches[1].str(), resource);
    send_json(res, canonical(encode(resource)), 201);
  }

  void list_resources(const Request& req, Response& res) {
    Json out = Json::array();
    for (const auto& r : store.list_resources(req.matches[1].str())) out.push_back(encode(r));
    send_json(res, canonical(out));
  }

  std::string set_document(const AnnotationSet& set) const {
    return export_set_json(set, store.get_video(set.video_id));
  }

  void create_set(const Request& req, Response& res) {
    const auto user = require_user(req);
    require_role(user, {Role::kTeacher, Role::kLearner});
    const auto video_id = req.matches[1].str();
    const auto j = req.body.empty() ? Json::object() : body_json(req);
    const JsonFields f(j, "", {"id", "owner"});
    AnnotationSet set;
    set.id = f.optional_string("id").value_or(ids.mint("s"));
    set.owner = f.optional_string("owner").value_or(user.id);
    set.video_id = video_id;
    if (set.owner != user.id && user.role != Role::kTeacher) {
      throw Error(ErrorCode::kForbiddenRole, "learners may only create their own sets", "owner");
    }
    store.get_video(video_id);
    try {
      store.get_set(set.id);
      throw Error(ErrorCode::kDuplicateId, "set " + set.id + " already exists", "id");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotFound) throw;
    }
    store.put_set(set, 0, {});
    send_json(res, set_document(store.get_set(set.id)), 201);
  }

  void list_sets(const Request& req, Response& res) {
    const auto user = caller(req);
    if (config.private_sets && !user) {
      throw Error(ErrorCode::kUnauthorized, "sets are private; log in to list them");
    }
    Json out = Json::array();
    for (const auto& s : store.list_sets(req.matches[1].str())) {
      if (!can_read(user, s)) continue;
      out.push_back({{"id", s.id},
                     {"owner", s.owner},
                     {"video_id", s.video_id},
                     {"revision", s.revision},
                     {"annotation_count", s.annotations.size()}});
    }
    send_json(res, canonical(out));
  }

  void get_set(const Request& req, Response& res) {
    send_json(res, set_document(readable_set(req, req.matches[1].str())));
  }

  void put_set(const Request& req, Response& res) {
    const auto user = require_user(req);
    const auto id = req.matches[1].str();
    const auto current = store.get_set(id);
    require_writer(user, current);

    auto j = body_json(req);
    const JsonFields f(j, "", {"document", "expected_revision", "entries"});
    auto doc = decode_set_document(f.required("document"));
    if (doc.set.id != id) {
      throw Error(ErrorCode::kValidationFailed, "document id differs from URL", "document.id");
    }
    std::vector<RevisionEntry> entries;
    const auto& list = f.required("entries");
    if (!list.is_array()) throw Error(ErrorCode::kValidationFailed, "expected array", "entries");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Json e = list[i];
      const std::string path = "entries[" + std::to_string(i) + "]";
      if (e.is_object()) {
        if (!e.contains("actor")) e["actor"] = user.id;
        if (!e.contains("at")) e["at"] = Timestamp::now().to_string();
      }
      auto entry = decode_revision_entry(e, path);
      if (entry.actor != user.id) {
        throw Error(ErrorCode::kForbiddenRole, "entries must be authored by the caller",
                    path + ".actor");
      }
      entries.push_back(std::move(entry));
    }
    store.put_set(doc.set, f.integer("expected_revision"), entries);
    send_json(res, set_document(store.get_set(id)));
  }

  // Runs one synthesized revision against the current set, retrying on
  // concurrent writes unless the client pinned a revision.
  template <typename Change>
  std::int64_t apply_change(const User& user, const std::string& set_id,
                            std::optional<std::int64_t> expected, Change change) {
    for (int attempt = 0;; ++attempt) {
      auto set = store.get_set(set_id);
      require_writer(user, set);
      if (expected && *expected != set.revision) {
        throw Error(ErrorCode::kRevisionConflict,
                    "expected revision " + std::to_string(*expected) + " but set is at " +
                        std::to_string(set.revision));
      }
      const auto base_revision = set.revision;
      RevisionEntry entry = change(set);
      entry.actor = user.id;
      entry.at = Timestamp::now();
      try {
        return store.put_set(set, base_revision, {entry});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kRevisionConflict || expected ||
            attempt + 1 >= kConvenienceRetries) {
          throw;
        }
      }
    }
  }

  TimeFragment fragment_from(const JsonFields& f, Json& body, Millis duration) const {
    if (const auto* target = f.optional("target")) {
      if (f.optional("fragment")) {
        throw Error(ErrorCode::kValidationFailed, "give either fragment or target", "target");
      }
      if (!target->is_string()) throw Error(ErrorCode::kValidationFailed, "expected string", "target");
      FragmentDirective d;
      try {
        d = parse_fragment_string(target->get<std::string>()).resolved(duration);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidFragment, e.message(), "target");
      }
      if (!d.temporal) throw Error(ErrorCode::kInvalidFragment, "target needs a t= dimension", "target");
      if (d.spatial) {
        if (!body.is_object() || body.value("kind", "") != "overlay") {
          throw Error(ErrorCode::kInvalidFragment, "xywh targets need an overlay body", "target");
        }
        if (!body.contains("region")) body["region"] = encode(*d.spatial);
      }
      return *d.temporal;
    }
    return decode_fragment(f.required("fragment"), "fragment");
  }

  static void check_fragment(const TimeFragment& fragment, Millis duration) {
    if (auto v = validate_fragment(fragment, duration); !v.empty()) {
      throw Error(ErrorCode::kInvalidFragment, v.front().message, "fragment");
    }
  }

  void add_annotation(const Request& req, Response& res) {
    const auto user = require_user(req);
    const auto set_id = req.matches[1].str();
    auto j = body_json(req);
    const JsonFields f(j, "", {"id", "fragment", "target", "body", "tags", "expected_revision"});
    const auto duration = store.get_video(store.get_set(set_id).video_id).duration_ms;

    Annotation a;
    a.id = f.optional_string("id").value_or(ids.mint("a"));
    a.author = user.id;
    a.created = a.modified = Timestamp::now();
    Json body = f.required("body");
    a.fragment = fragment_from(f, body, duration);
    check_fragment(a.fragment, duration);
    a.body = decode_body(body, "body");
    if (f.optional("tags")) a.tags = normalize_tags(f.strings("tags"));

    const auto revision = apply_change(user, set_id, f.optional_integer("expected_revision"),
                                       [&](AnnotationSet& set) {
                                         set.annotations.push_back(a);
                                         RevisionEntry e;
                                         e.op = RevisionOp::kAdd;
                                         e.annotation_id = a.id;
                                         e.after = a;
                                         return e;
                                       });
    send_json(res, canonical({{"annotation", encode(a)}, {"revision", revision}}), 201);
  }

  void update_annotation(const Request& req, Response& res) {
    const auto user = require_user(req);
    const auto set_id = req.matches[1].str();
    const auto annotation_id = req.matches[2].str();
    auto j = body_json(req);
    const JsonFields f(j, "", {"fragment", "target", "body", "tags", "expected_revision"});
    const auto duration = store.get_video(store.get_set(set_id).video_id).duration_ms;

    Annotation updated;
    const auto revision = apply_change(
        user, set_id, f.optional_integer("expected_revision"), [&](AnnotationSet& set) {
          const auto it = std::find_if(set.annotations.begin(), set.annotations.end(),
                                       [&](const Annotation& a) { return a.id == annotation_id; });
          if (it == set.annotations.end()) {
            throw Error(ErrorCode::kNotFound, "no annotation " + annotation_id + " in " + set_id);
          }
          RevisionEntry e;
          e.op = RevisionOp::kUpdate;
          e.annotation_id = annotation_id;
          e.before = *it;
          Json body = f.optional("body") ? f.required("body") : encode(it->body);
          if (f.optional("fragment") || f.optional("target")) {
            it->fragment = fragment_from(f, body, duration);
            check_fragment(it->fragment, duration);
          }
          if (f.optional("body")) it->body = decode_body(body, "body");
          if (f.optional("tags")) it->tags = normalize_tags(f.strings("tags"));
          it->modified = std::max(Timestamp::now(), it->created);
          e.after = *it;
          updated = *it;
          return e;
        });
    send_json(res, canonical({{"annotation", encode(updated)}, {"revision", revision}}));
  }

  void delete_annotation(const Request& req, Response& res) {
    const auto user = require_user(req);
    const auto set_id = req.matches[1].str();
    const auto annotation_id = req.matches[2].str();
    std::optional<std::int64_t> expected;
    if (req.has_param("expected_revision")) {
      try {
        expected = std::stoll(req.get_param_value("expected_revision"));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidRequest, "expected_revision must be an integer",
                    "expected_revision");
      }
    }
    const auto revision = apply_change(user, set_id, expected, [&](AnnotationSet& set) {
      const auto it = std::find_if(set.annotations.begin(), set.annotations.end(),
                                   [&](const Annotation& a) { return a.id == annotation_id; });
      if (it == set.annotations.end()) {
        throw Error(ErrorCode::kNotFound, "no annotation " + annotation_id + " in " + set_id);
      }
      RevisionEntry e;
      e.op = RevisionOp::kRemove;
      e.annotation_id = annotation_id;
      e.before = *it;
      set.annotations.erase(it);
      return e;
    });
    send_json(res, canonical({{"revision", revision}}));
  }

  void history(const Request& req, Response& res) {
    const auto id = req.matches[1].str();
    readable_set(req, id);
    send_json(res, canonical_envelope(encode(store.get_log(id))));
  }

  void history_at(const Request& req, Response& res) {
    const auto id = req.matches[1].str();
    readable_set(req, id);
    std::int64_t at = 0;
    try {
      at = std::stoll(req.matches[2].str());
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidRequest, "revision must be an integer");
    }
    send_json(res, canonical(encode_replay(store.get_log(id), at)));
  }

  static Millis tolerance(const JsonFields& f) {
    const auto t = f.optional_integer("tolerance_ms").value_or(kDefaultToleranceMs);
    if (t < 0) throw Error(ErrorCode::kValidationFailed, "must be >= 0", "tolerance_ms");
    return t;
  }

  void diff(const Request& req, Response& res) {
    require_user(req);
    const auto j = body_json(req);
    const JsonFields f(j, "", {"set_a", "set_b", "tolerance_ms"});
    const auto a = set_operand(req, f.required("set_a"), "set_a");
    const auto b = set_operand(req, f.required("set_b"), "set_b");
    send_json(res, canonical(encode(diff_pair(a, b, tolerance(f)))));
  }

  void merge_sets(const Request& req, Response& res) {
    const auto user = require_user(req);
    const auto video_id = req.matches[1].str();
    const auto video = store.get_video(video_id);
    const auto j = body_json(req);
    const JsonFields f(j, "", {"set_ids", "policy", "save_as_owner", "save_as_id"});
    std::vector<AnnotationSet> sets;
    const auto set_ids = f.strings("set_ids");
    for (std::size_t i = 0; i < set_ids.size(); ++i) {
      auto s = readable_set(req, set_ids[i]);
      if (s.video_id != video_id) {
        throw Error(ErrorCode::kVideoMismatch, "set " + s.id + " annotates another video",
                    "set_ids[" + std::to_string(i) + "]");
      }
      sets.push_back(std::move(s));
    }
    const auto result = merge(sets, decode_merge_policy(f.required("policy"), "policy"));
    Json out = encode(result);

    if (const auto owner = f.optional_string("save_as_owner")) {
      if (*owner != user.id && user.role != Role::kTeacher) {
        throw Error(ErrorCode::kForbiddenRole, "learners may only save merges as themselves",
                    "save_as_owner");
      }
      if (user.role == Role::kViewer) {
        throw Error(ErrorCode::kForbiddenRole, "viewers cannot save sets", "save_as_owner");
      }
      AnnotationSet merged;
      merged.id = f.optional_string("save_as_id").value_or(ids.mint("merged"));
      merged.video_id = video_id;
      merged.owner = *owner;
      merged.annotations = result.merged;
      const auto entries = plan_revisions({}, merged.annotations, user.id, Timestamp::now());
      const auto revision = store.put_set(merged, 0, entries);
      out["saved_set"] = {{"id", merged.id}, {"revision", revision}};
      send_json(res, canonical(out), 201);
      return;
    }
    send_json(res, canonical(out));
  }

  void grade_set(const Request& req, Response& res) {
    require_role(require_user(req), {Role::kTeacher});
    const auto j = body_json(req);
    const JsonFields f(j, "", {"learner_set", "key_set", "tolerance_ms"});
    const auto learner = set_operand(req, f.required("learner_set"), "learner_set");
    const auto key = set_operand(req, f.required("key_set"), "key_set");
    send_json(res, canonical(encode(grade(learner, key, tolerance(f)))));
  }

  void export_set(const Request& req, Response& res) {
    const auto set = readable_set(req, req.matches[1].str());
    const auto video = store.get_video(set.video_id);
    const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
    if (format == "json") {
      send_json(res, export_set_json(set, video));
    } else if (format == "webvtt") {
      Millis padding = kDefaultPointPaddingMs;
      if (req.has_param("point_padding_ms")) {
        try {
          padding = std::stoll(req.get_param_value("point_padding_ms"));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidRequest, "must be an integer", "point_padding_ms");
        }
      }
      res.set_content(export_webvtt(set, video, padding), "text/vtt");
    } else if (format == "csv") {
      res.set_content(export_csv(set, video), "text/csv");
    } else {
      throw Error(ErrorCode::kUnsupportedFormat, "format must be json, webvtt or csv", "format");
    }
  }

  // -- wiring ------------------------------------------------------------------

  using Method = void (Impl::*)(const Request&, Response&);

  httplib::Server::Handler wrap(Method method) {
    return [this, method](const Request& req, Response& res) {
      try {
        (this->*method)(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, Error(ErrorCode::kInternal, e.what()));
      }
    };
  }

  void install_routes() {
    server.set_payload_max_length(kMaxBodyBytes);
    server.set_error_handler([](const Request&, Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const auto code = res.status == 404   ? ErrorCode::kNotFound
                        : res.status == 413 ? ErrorCode::kPayloadTooLarge
                                            : ErrorCode::kInvalidRequest;
      const auto status = res.status;
      send_error(res, Error(code, httplib::status_message(status)));
      res.status = status;
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Post("/api/videos", wrap(&Impl::create_video));
    server.Get("/api/videos", wrap(&Impl::list_videos));
    server.Get(route("/api/videos/{id}"), wrap(&Impl::get_video));
    server.Post(route("/api/videos/{id}/resources"), wrap(&Impl::create_resource));
    server.Get(route("/api/videos/{id}/resources"), wrap(&Impl::list_resources));
    server.Post(route("/api/videos/{id}/sets"), wrap(&Impl::create_set));
    server.Get(route("/api/videos/{id}/sets"), wrap(&Impl::list_sets));
    server.Post(route("/api/videos/{id}/merge"), wrap(&Impl::merge_sets));
    server.Get(route("/api/sets/{id}"), wrap(&Impl::get_set));
    server.Put(route("/api/sets/{id}"), wrap(&Impl::put_set));
    server.Post(route("/api/sets/{id}/annotations"), wrap(&Impl::add_annotation));
    server.Put(route("/api/sets/{id}/annotations/{id}"), wrap(&Impl::update_annotation));
    server.Delete(route("/api/sets/{id}/annotations/{id}"), wrap(&Impl::delete_annotation));
    server.Get(route("/api/sets/{id}/history"), wrap(&Impl::history));
    server.Get(route("/api/sets/{id}/history/([0-9]+)"), wrap(&Impl::history_at));
    server.Get(route("/api/sets/{id}/export"), wrap(&Impl::export_set));
    server.Post("/api/diff", wrap(&Impl::diff));
    server.Post("/api/grade", wrap(&Impl::grade_set));

    if (config.static_dir && std::filesystem::is_directory(*config.static_dir)) {
      server.set_mount_point("/", config.static_dir->string());
    }
  }
};

Service::Service(Store& store, ServiceConfig config)
    : impl_(std::make_unique<Impl>(store, std::move(config))) {
  impl_->install_routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& cfg = impl_->config;
  if (cfg.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(cfg.host);
  } else if (impl_->server.bind_to_port(cfg.host, cfg.port)) {
    impl_->port = cfg.port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  return impl_->port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace hyvid
