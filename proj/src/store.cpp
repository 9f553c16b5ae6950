#include "hyvid/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "hyvid/interchange.hpp"
#include "hyvid/json_codec.hpp"

namespace hyvid {

namespace fs = std::filesystem;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kTeacher: return "teacher";
    case Role::kLearner: return "learner";
    case Role::kViewer: return "viewer";
  }
  return "viewer";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "teacher") return Role::kTeacher;
  if (s == "learner") return Role::kLearner;
  if (s == "viewer") return Role::kViewer;
  return std::nullopt;
}

namespace {

constexpr std::string_view kVideosFormat = "hyvid-videos";
constexpr std::string_view kUsersFormat = "hyvid-users";
constexpr std::string_view kResourcesFormat = "hyvid-resources";

[[noreturn]] void io_error(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::kIo, what + " " + path.string() + ": " + std::strerror(errno));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot read");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) io_error(path, "cannot read");
  return buf.str();
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void write_durable(const fs::path& path, std::string_view bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error(path, "cannot create");
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error(path, "cannot write");
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) io_error(path, "cannot flush");
}

fs::path temp_path(const fs::path& path) { return fs::path(path.string() + ".tmp"); }

void rename_into_place(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::rename(from, to, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + from.string() + ": " + ec.message());
  fsync_dir(to.parent_path());
}

void write_atomic(const fs::path& path, std::string_view bytes) {
  const auto tmp = temp_path(path);
  write_durable(tmp, bytes);
  rename_into_place(tmp, path);
}

Json read_envelope(const fs::path& path, std::string_view format) {
  const Json j = parse_json(read_file(path));
  if (!j.is_object() || j.value("format", "") != format) {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown format tag", "format");
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported version", "version");
  }
  return j;
}

Json encode(const User& u) {
  return {{"id", u.id}, {"display_name", u.display_name}, {"role", to_string(u.role)},
          {"token", u.token}};
}

User decode_user(const Json& j, const std::string& path) {
  const JsonFields f(j, path, {"id", "display_name", "role", "token"});
  User u;
  u.id = f.string("id");
  u.display_name = f.string("display_name");
  const auto role = role_from_string(f.string("role"));
  if (!role) throw Error(ErrorCode::kValidationFailed, "unknown role", f.path("role"));
  u.role = *role;
  u.token = f.string("token");
  return u;
}

const Json& array_field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw Error(ErrorCode::kValidationFailed, "expected array", key);
  }
  return *it;
}

bool matches_log(const AnnotationSet& set, const RevisionLog& log) {
  return set.revision == log.size() && replay(log) == set.annotations;
}

}  // namespace

// ---------------------------------------------------------------------------

Store::Store(fs::path root, StoreOptions options)
    : root_(std::move(root)), options_(std::move(options)) {}

std::unique_ptr<Store> Store::open(const fs::path& root, StoreOptions options) {
  std::unique_ptr<Store> store(new Store(root, std::move(options)));
  store->load();
  return store;
}

void Store::fault(std::string_view point) const {
  if (options_.fault_hook) options_.fault_hook(point);
}

void Store::require_writable() const {
  if (read_only()) {
    throw Error(ErrorCode::kReadOnly, "store is read-only: " + describe(corruption_));
  }
}

void Store::load() {
  std::error_code ec;
  for (const auto* dir : {"", "sets", "logs", "resources"}) {
    fs::create_directories(root_ / dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + (root_ / dir).string() + ": " + ec.message());
  }

  auto guarded = [&](const std::string& where, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIo) throw;
      corruption_.push_back({where, e.what()});
    }
  };

  for (const auto* name : {"videos.json", "users.json"}) {
    fs::remove(temp_path(root_ / name), ec);
  }
  if (fs::exists(root_ / "videos.json")) {
    guarded("videos.json", [&] {
      const auto j = read_envelope(root_ / "videos.json", kVideosFormat);
      const auto& list = array_field(j, "videos");
      for (std::size_t i = 0; i < list.size(); ++i) {
        auto v = decode_video(list[i], "videos[" + std::to_string(i) + "]");
        videos_.emplace(v.id, std::move(v));
      }
    });
  }
  if (fs::exists(root_ / "users.json")) {
    guarded("users.json", [&] {
      const auto j = read_envelope(root_ / "users.json", kUsersFormat);
      const auto& list = array_field(j, "users");
      for (std::size_t i = 0; i < list.size(); ++i) {
        auto u = decode_user(list[i], "users[" + std::to_string(i) + "]");
        users_.emplace(u.id, std::move(u));
      }
    });
  }

  for (const auto& entry : fs::directory_iterator(root_ / "resources")) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".tmp") {
      fs::remove(entry.path(), ec);
      continue;
    }
    if (entry.path().extension() != ".json") continue;
    guarded("resources/" + name, [&] {
      const auto j = read_envelope(entry.path(), kResourcesFormat);
      const auto video_id = j.value("video_id", "");
      auto& catalog = resources_[video_id];
      const auto& list = array_field(j, "resources");
      for (std::size_t i = 0; i < list.size(); ++i) {
        auto r = decode_resource(list[i], "resources[" + std::to_string(i) + "]");
        catalog.emplace(r.id, std::move(r));
      }
    });
  }

  std::set<std::string> ids;
  for (const auto* dir : {"sets", "logs"}) {
    for (const auto& entry : fs::directory_iterator(root_ / dir)) {
      auto name = entry.path().filename().string();
      if (name.ends_with(".json.tmp")) {
        ids.insert(name.substr(0, name.size() - 9));
      } else if (name.ends_with(".json")) {
        ids.insert(name.substr(0, name.size() - 5));
      }
    }
  }
  for (const auto& id : ids) load_set(id);
}

void Store::load_set(const std::string& id) {
  const auto set_path = root_ / "sets" / (id + ".json");
  const auto log_path = root_ / "logs" / (id + ".json");
  const std::string where = "sets/" + id;
  std::error_code ec;

  // An unrenamed log was never committed.
  fs::remove(temp_path(log_path), ec);

  if (!fs::exists(log_path)) {
    fs::remove(temp_path(set_path), ec);
    if (fs::exists(set_path)) corruption_.push_back({where, "revision log is missing"});
    return;
  }

  try {
    const auto log = decode_revision_log(parse_json(read_file(log_path)));

    if (fs::exists(temp_path(set_path))) {
      bool roll_forward = false;
      try {
        const auto pending = import_set_json(read_file(temp_path(set_path)));
        roll_forward = pending.set.id == id && matches_log(pending.set, log);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kIo) throw;
      }
      if (roll_forward) {
        rename_into_place(temp_path(set_path), set_path);
      } else {
        fs::remove(temp_path(set_path), ec);
      }
    }
    if (!fs::exists(set_path)) {
      corruption_.push_back({where, "revision log without a set document"});
      return;
    }

    auto imported = import_set_json(read_file(set_path));
    auto record = std::make_shared<StoredSet>(StoredSet{std::move(imported.set), log});
    const auto& set = record->set;
    if (set.id != id) corruption_.push_back({where, "document id " + set.id + " differs from file name"});
    if (log.set_id != id) corruption_.push_back({where, "log belongs to set " + log.set_id});
    const auto video = videos_.find(set.video_id);
    if (video == videos_.end() || video->second != imported.video) {
      corruption_.push_back({where, "unknown or altered video " + set.video_id});
    }
    try {
      if (!matches_log(set, log)) {
        corruption_.push_back({where, "revision log does not replay to the stored set"});
      }
    } catch (const Error& e) {
      corruption_.push_back({where, std::string("revision log does not replay: ") + e.what()});
    }
    sets_.emplace(id, std::move(record));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    corruption_.push_back({where, e.what()});
  }
}

// ---------------------------------------------------------------------------
// Videos, resources, users

void Store::save_videos() const {
  Json list = Json::array();
  for (const auto& [id, v] : videos_) list.push_back(encode(v));
  write_atomic(root_ / "videos.json",
               canonical_envelope({{"format", kVideosFormat},
                                   {"version", kFormatVersion},
                                   {"videos", std::move(list)}}));
}

void Store::save_users() const {
  Json list = Json::array();
  for (const auto& [id, u] : users_) list.push_back(encode(u));
  write_atomic(root_ / "users.json",
               canonical_envelope({{"format", kUsersFormat},
                                   {"version", kFormatVersion},
                                   {"users", std::move(list)}}));
}

void Store::save_resources(const std::string& video_id) const {
  Json list = Json::array();
  if (const auto it = resources_.find(video_id); it != resources_.end()) {
    for (const auto& [id, r] : it->second) list.push_back(encode(r));
  }
  write_atomic(root_ / "resources" / (video_id + ".json"),
               canonical_envelope({{"format", kResourcesFormat},
                                   {"version", kFormatVersion},
                                   {"video_id", video_id},
                                   {"resources", std::move(list)}}));
}

void Store::put_video(const VideoReference& video) {
  require_writable();
  if (auto v = validate_video(video); !v.empty()) {
    throw Error(ErrorCode::kValidationFailed, std::move(v));
  }
  std::unique_lock lock(meta_mutex_);
  if (videos_.contains(video.id)) {
    throw Error(ErrorCode::kDuplicateId, "video " + video.id + " already exists", "id");
  }
  videos_.emplace(video.id, video);
  try {
    save_videos();
  } catch (...) {
    videos_.erase(video.id);
    throw;
  }
}

VideoReference Store::get_video(std::string_view id) const {
  std::shared_lock lock(meta_mutex_);
  const auto it = videos_.find(id);
  if (it == videos_.end()) throw Error(ErrorCode::kNotFound, "no video " + std::string(id));
  return it->second;
}

std::vector<VideoReference> Store::list_videos() const {
  std::shared_lock lock(meta_mutex_);
  std::vector<VideoReference> out;
  for (const auto& [id, v] : videos_) out.push_back(v);
  return out;
}

void Store::put_resource(std::string_view video_id, const Resource& resource) {
  require_writable();
  if (auto v = validate_resource(resource); !v.empty()) {
    throw Error(ErrorCode::kValidationFailed, std::move(v));
  }
  std::unique_lock lock(meta_mutex_);
  if (!videos_.contains(video_id)) {
    throw Error(ErrorCode::kNotFound, "no video " + std::string(video_id));
  }
  auto& catalog = resources_[std::string(video_id)];
  if (catalog.contains(resource.id)) {
    throw Error(ErrorCode::kDuplicateId, "resource " + resource.id + " already exists", "id");
  }
  catalog.emplace(resource.id, resource);
  try {
    save_resources(std::string(video_id));
  } catch (...) {
    catalog.erase(resource.id);
    throw;
  }
}

std::vector<Resource> Store::list_resources(std::string_view video_id) const {
  std::shared_lock lock(meta_mutex_);
  if (!videos_.contains(video_id)) {
    throw Error(ErrorCode::kNotFound, "no video " + std::string(video_id));
  }
  std::vector<Resource> out;
  if (const auto it = resources_.find(video_id); it != resources_.end()) {
    for (const auto& [id, r] : it->second) out.push_back(r);
  }
  return out;
}

void Store::put_user(const User& user) {
  require_writable();
  if (!is_valid_id(user.id)) throw Error(ErrorCode::kValidationFailed, "invalid id", "id");
  if (user.token.empty()) throw Error(ErrorCode::kValidationFailed, "empty token", "token");
  std::unique_lock lock(meta_mutex_);
  if (users_.contains(user.id)) {
    throw Error(ErrorCode::kDuplicateId, "user " + user.id + " already exists", "id");
  }
  for (const auto& [id, u] : users_) {
    if (u.token == user.token) throw Error(ErrorCode::kDuplicateId, "token already in use", "token");
  }
  users_.emplace(user.id, user);
  try {
    save_users();
  } catch (...) {
    users_.erase(user.id);
    throw;
  }
}

User Store::get_user(std::string_view id) const {
  std::shared_lock lock(meta_mutex_);
  const auto it = users_.find(id);
  if (it == users_.end()) throw Error(ErrorCode::kNotFound, "no user " + std::string(id));
  return it->second;
}

User Store::authenticate(std::string_view token) const {
  std::shared_lock lock(meta_mutex_);
  if (!token.empty()) {
    for (const auto& [id, u] : users_) {
      if (u.token == token) return u;
    }
  }
  throw Error(ErrorCode::kUnauthorized, "unknown token");
}

// ---------------------------------------------------------------------------
// Sets

std::shared_ptr<const StoredSet> Store::snapshot(std::string_view id) const {
  std::shared_lock lock(index_mutex_);
  const auto it = sets_.find(id);
  return it == sets_.end() ? nullptr : it->second;
}

std::mutex& Store::set_lock(const std::string& id) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = set_locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::int64_t Store::put_set(const AnnotationSet& submitted, std::int64_t expected_revision,
                            const std::vector<RevisionEntry>& entries) {
  require_writable();
  if (!is_valid_id(submitted.id)) throw Error(ErrorCode::kValidationFailed, "invalid id", "id");

  std::lock_guard write_lock(set_lock(submitted.id));
  const auto current = snapshot(submitted.id);
  const std::int64_t stored_revision = current ? current->set.revision : 0;
  if (expected_revision != stored_revision) {
    throw Error(ErrorCode::kRevisionConflict,
                "expected revision " + std::to_string(expected_revision) + " but set is at " +
                    std::to_string(stored_revision));
  }
  if (current && (current->set.owner != submitted.owner ||
                  current->set.video_id != submitted.video_id)) {
    throw Error(ErrorCode::kValidationFailed, "owner and video of a set cannot change");
  }

  const auto video = get_video(submitted.video_id);
  const auto catalog = list_resources(submitted.video_id);

  RevisionLog log = current ? current->log : RevisionLog{submitted.id, {}};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      log = append_revision(log, entries[i]);
    } catch (const Error& e) {
      const std::string at = "entries[" + std::to_string(i) + "]";
      throw Error(ErrorCode::kReplayMismatch, e.message(), e.path().empty() ? at : at + "." + e.path());
    }
  }

  AnnotationSet next = submitted;
  next.annotations = sort_timeline(submitted);
  next.revision = log.size();
  if (auto violations = validate_set(next, video, catalog); !violations.empty()) {
    throw Error(ErrorCode::kValidationFailed, std::move(violations));
  }
  if (replay(log) != next.annotations) {
    throw Error(ErrorCode::kReplayMismatch,
                "revision entries do not reproduce the submitted annotations", "entries");
  }

  const auto set_path = root_ / "sets" / (next.id + ".json");
  const auto log_path = root_ / "logs" / (next.id + ".json");
  write_durable(temp_path(set_path), export_set_json(next, video));
  fault("set-temp-written");
  write_durable(temp_path(log_path), canonical_envelope(encode(log)));
  fault("log-temp-written");
  rename_into_place(temp_path(log_path), log_path);
  fault("log-renamed");
  rename_into_place(temp_path(set_path), set_path);
  fault("set-renamed");

  auto record = std::make_shared<const StoredSet>(StoredSet{std::move(next), std::move(log)});
  const auto revision = record->set.revision;
  {
    std::unique_lock lock(index_mutex_);
    sets_[submitted.id] = std::move(record);
  }
  return revision;
}

AnnotationSet Store::get_set(std::string_view id) const {
  const auto s = snapshot(id);
  if (!s) throw Error(ErrorCode::kNotFound, "no set " + std::string(id));
  return s->set;
}

RevisionLog Store::get_log(std::string_view id) const {
  const auto s = snapshot(id);
  if (!s) throw Error(ErrorCode::kNotFound, "no set " + std::string(id));
  return s->log;
}

std::vector<AnnotationSet> Store::list_sets(std::string_view video_id) const {
  {
    std::shared_lock lock(meta_mutex_);
    if (!videos_.contains(video_id)) {
      throw Error(ErrorCode::kNotFound, "no video " + std::string(video_id));
    }
  }
  std::shared_lock lock(index_mutex_);
  std::vector<AnnotationSet> out;
  for (const auto& [id, s] : sets_) {
    if (s->set.video_id == video_id) out.push_back(s->set);
  }
  return out;
}

}  // namespace hyvid
