#pragma once

// HTTP/JSON front end over a Store. All responses are canonical JSON (or the
// requested export format); errors are {"code","message","path"} objects
// with the status from http_status().

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "hyvid/store.hpp"

namespace hyvid {

inline constexpr int kDefaultPort = 8675;
inline constexpr std::size_t kMaxBodyBytes = 10 * 1024 * 1024;

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = kDefaultPort;
  /// Learners may only read their own sets and sets owned by teachers.
  bool private_sets = false;
  /// Served at `/` when set and present.
  std::optional<std::filesystem::path> static_dir;
};

class Service {
 public:
  Service(Store& store, ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the port.
  int bind();
  /// Serves until stop(). Call bind() first.
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hyvid
