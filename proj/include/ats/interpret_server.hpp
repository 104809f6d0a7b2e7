#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ats/profiler.hpp"
#include "ats/types.hpp"

namespace httplib {
class Server;
}

namespace ats {

// HTTP+JSON service over one loaded profiler and an optional dataset. All
// state is read-only after construction, so requests are served
// concurrently without locking.
//
//   GET  /api/metadata
//   GET  /api/instances?offset=&limit=
//   POST /api/predict             {"text": ...}
//   POST /api/attribute/tokens    {"text": ...}
//   POST /api/attribute/features  {"text": ...}
class InterpretServer {
 public:
  InterpretServer(std::shared_ptr<const Profiler> profiler, std::optional<Dataset> data,
                  std::filesystem::path ui_dir = {});
  ~InterpretServer();

  InterpretServer(const InterpretServer&) = delete;
  InterpretServer& operator=(const InterpretServer&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the bound
  // port or throws PortBusy.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();
  bool running() const;

 private:
  void install_routes();

  std::shared_ptr<const Profiler> profiler_;
  std::optional<Dataset> data_;
  std::filesystem::path ui_dir_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ats
