#pragma once

// Local HTTP service backing the labeling UI. All geometry is computed here
// through the same handlers the CLI uses.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "twinpose/annodata.hpp"

namespace httplib {
class Server;
}

namespace twinpose {

inline constexpr int kDefaultPort = 8753;

struct ServiceConfig {
  int port = kDefaultPort;
  std::filesystem::path dataset_root;
  bool read_only = false;
  std::string host = "127.0.0.1";

  /// Throws std::invalid_argument when the port is outside [1, 65535] or the
  /// dataset root is not a directory.
  void validate() const;
};

/// Flag beats TWINPOSE_PORT, which beats the default.
int resolve_port(std::optional<int> flag);

class Service {
 public:
  /// Loads the dataset; throws DataError on load failure.
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the configured port. Returns false when it is unavailable.
  bool bind();
  /// Binds an ephemeral port and returns it (tests).
  int bind_any_port();
  /// Blocks serving requests until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;
  int port() const { return port_; }

  /// Current snapshot of a frame's annotations, or null for unknown ids.
  std::shared_ptr<const AnnotationSet> snapshot(const std::string& frame_id) const;

 private:
  struct Slot {
    std::filesystem::path path;
    std::mutex write_mutex;
    std::shared_ptr<const AnnotationSet> current;
  };

  void routes();

  ServiceConfig config_;
  Dataset dataset_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
};

/// Runs the service until interrupted. Returns 2 when startup fails.
int serve(const ServiceConfig& config, std::ostream& err);

}  // namespace twinpose
