// Local JSON-over-HTTP service around a single mutable scene.
//
//   GET  /api/health          {"status":"ok","version":...}
//   GET  /api/scene           canonical scene config
//   PUT  /api/scene           replace the scene (400 malformed, 422 invalid)
//   POST /api/trace           trace the current scene, or the scene in the body
//   POST /api/optimize        {"budget":N,"seed":S} -> 202 {"id":...}, 409 while a job runs
//   GET  /api/optimize/{id}   job status and history, 404 for unknown ids

#ifndef TFOLD_SERVICE_HPP
#define TFOLD_SERVICE_HPP

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "tfold/config.hpp"
#include "tfold/design_opt.hpp"

namespace httplib {
class Server;
}

namespace tfold {

/// Response body of POST /api/trace.
nlohmann::ordered_json trace_response(const SensorScene& scene);

class Service {
 public:
  explicit Service(SceneConfig scene);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Job {
    std::string id;
    int budget = 0;
    std::uint64_t seed = 0;
    std::mutex mutex;
    std::string status = "running";
    std::string error;
    std::vector<HistoryEntry> history;
    double initial_score = 0.0;
    double best_score = 0.0;
    std::string best_scene;
    std::thread worker;
  };

  void routes();
  nlohmann::ordered_json job_record(Job& job);

  std::unique_ptr<httplib::Server> server_;
  std::shared_mutex scene_mutex_;
  SceneConfig scene_;
  std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  int next_job_ = 1;
  std::atomic<bool> stopping_{false};
};

}  // namespace tfold

#endif  // TFOLD_SERVICE_HPP
