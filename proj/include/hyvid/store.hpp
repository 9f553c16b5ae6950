#pragma once

// File-backed persistence with optimistic concurrency.
//
// Layout under the root directory, every file canonical JSON:
//
//   videos.json                 video references
//   users.json                  users, roles and bearer tokens
//   resources/<video_id>.json   resource catalog of one video
//   sets/<set_id>.json          annotation set document
//   logs/<set_id>.json          revision log of that set
//
// A set write is committed by renaming its log into place. The set document
// is written to a temp file first and renamed afterwards; on open, a pending
// temp document that matches its committed log is rolled forward and any
// other temp file is discarded.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hyvid/model.hpp"
#include "hyvid/revision.hpp"

namespace hyvid {

enum class Role { kTeacher, kLearner, kViewer };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);

struct User {
  std::string id;
  std::string display_name;
  Role role = Role::kViewer;
  std::string token;

  bool operator==(const User&) const = default;
};

struct StoredSet {
  AnnotationSet set;
  RevisionLog log;
};

struct StoreOptions {
  /// Called at named points of a set write ("set-temp-written",
  /// "log-temp-written", "log-renamed", "set-renamed"). Tests throw from it
  /// to simulate a crash.
  std::function<void(std::string_view)> fault_hook;
};

class Store {
 public:
  /// Creates the directory tree when missing, loads every index and checks
  /// that each log replays to its set. Sets that fail the check are listed
  /// in corruption() and the store becomes read-only. Throws Error(kIo) when
  /// files cannot be read.
  static std::unique_ptr<Store> open(const std::filesystem::path& root, StoreOptions options = {});

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }
  bool read_only() const noexcept { return !corruption_.empty(); }
  const std::vector<Violation>& corruption() const noexcept { return corruption_; }

  void put_video(const VideoReference& video);
  VideoReference get_video(std::string_view id) const;
  std::vector<VideoReference> list_videos() const;

  void put_resource(std::string_view video_id, const Resource& resource);
  std::vector<Resource> list_resources(std::string_view video_id) const;

  void put_user(const User& user);
  User get_user(std::string_view id) const;
  /// Throws Error(kUnauthorized) for unknown tokens.
  User authenticate(std::string_view token) const;

  /// Replaces the set's annotations. `expected_revision` must equal the
  /// stored revision (0 for a new set), and `entries` replayed on top of the
  /// stored log must reproduce `set.annotations`. Returns the new revision.
  std::int64_t put_set(const AnnotationSet& set, std::int64_t expected_revision,
                       const std::vector<RevisionEntry>& entries);

  AnnotationSet get_set(std::string_view id) const;
  RevisionLog get_log(std::string_view id) const;
  /// Sets of one video, by id.
  std::vector<AnnotationSet> list_sets(std::string_view video_id) const;

 private:
  Store(std::filesystem::path root, StoreOptions options);

  void load();
  void load_set(const std::string& id);
  std::shared_ptr<const StoredSet> snapshot(std::string_view id) const;
  std::mutex& set_lock(const std::string& id);
  void require_writable() const;
  void fault(std::string_view point) const;

  void save_videos() const;
  void save_users() const;
  void save_resources(const std::string& video_id) const;

  std::filesystem::path root_;
  StoreOptions options_;
  std::vector<Violation> corruption_;

  mutable std::shared_mutex meta_mutex_;
  std::map<std::string, VideoReference, std::less<>> videos_;
  std::map<std::string, std::map<std::string, Resource>, std::less<>> resources_;
  std::map<std::string, User, std::less<>> users_;

  mutable std::shared_mutex index_mutex_;
  std::map<std::string, std::shared_ptr<const StoredSet>, std::less<>> sets_;

  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> set_locks_;
};

}  // namespace hyvid
