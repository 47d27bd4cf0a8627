#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "painter/inference.hpp"

namespace painter {

struct ServiceOptions {
  std::size_t max_sessions = 64;
  std::chrono::seconds idle_timeout{30 * 60};
  std::string static_dir;
  Budgets budgets;
};

/// Classes, task names, prompt templates and location tags for the UI.
nlohmann::json studio_meta(const std::vector<std::string>& classes);

/// Session-oriented HTTP front end over one shared model:
///   POST   /api/session                  -> {"id"}
///   POST   /api/session/{id}/command     -> server-sent events
///   DELETE /api/session/{id}/command     -> cancel the in-flight command
///   DELETE /api/session/{id}
///   GET    /api/session/{id}/canvas.png | canvas.ppm
///   GET    /api/meta
class StudioService {
 public:
  StudioService(std::shared_ptr<const LanguageModel> model, nlohmann::json meta, ServiceOptions opt = {});
  ~StudioService();
  StudioService(const StudioService&) = delete;
  StudioService& operator=(const StudioService&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  void stop();

  std::size_t session_count() const;
  /// Drops idle sessions whose last use is older than the timeout at `now`.
  void evict_idle(std::chrono::steady_clock::time_point now);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace painter
