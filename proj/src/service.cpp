#include "tfold/service.hpp"

#include "tfold/report.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include "httplib.h"

namespace tfold {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

struct Cancelled {};

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = "") {
  json body;
  body["error"] = message;
  if (!field.empty()) body["field"] = field;
  send(res, status, body);
}

// 400 for text that is not a config at all, 422 for a config that fails validation.
bool parse_or_reject(const std::string& text, httplib::Response& res, SceneConfig& out) {
  try {
    out = parse_scene_config(text);
    out.to_scene();
    return true;
  } catch (const ConfigSyntaxError& e) {
    send_error(res, 400, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 422, e.what(), e.field());
  } catch (const std::exception& e) {
    send_error(res, 422, e.what());
  }
  return false;
}

json history_json(const std::vector<HistoryEntry>& history) {
  json rows = json::array();
  for (const HistoryEntry& h : history)
    rows.push_back({{"evaluation", h.evaluation},
                    {"score", h.score},
                    {"best_score", h.best_score},
                    {"coverage", h.coverage},
                    {"min_angle_deg", h.min_angle}});
  return rows;
}

}  // namespace

json trace_response(const SensorScene& scene) {
  const TraceArtifacts a = trace_artifacts(scene);
  const auto lines = ray_polylines(a.traces);
  json rays = json::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json pts = json::array();
    for (Point2 p : lines[i]) pts.push_back({p.x, p.y});
    rays.push_back({{"pixel", a.traces[i].pixel_index}, {"terminal", to_string(a.traces[i].terminal)}, {"points", pts}});
  }
  json body;
  body["summary"] = summary_record(a.metrics, a.traces);
  body["metrics_table"] = a.metrics_tsv;
  body["rays"] = std::move(rays);
  return body;
}

Service::Service(SceneConfig scene) : server_(std::make_unique<httplib::Server>()), scene_(std::move(scene)) {
  scene_.to_scene();
  routes();
}

Service::~Service() {
  stop();
  std::lock_guard lock(jobs_mutex_);
  for (auto& [id, job] : jobs_)
    if (job->worker.joinable()) job->worker.join();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) return -1;
  return port;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop() {
  stopping_ = true;
  server_->stop();
}

json Service::job_record(Job& job) {
  std::lock_guard lock(job.mutex);
  json body;
  body["id"] = job.id;
  body["status"] = job.status;
  body["budget"] = job.budget;
  body["seed"] = job.seed;
  body["evaluations"] = job.history.size();
  if (!job.history.empty()) body["best_score"] = job.history.back().best_score;
  if (job.status == "done") {
    body["initial_score"] = job.initial_score;
    body["best_score"] = job.best_score;
    body["best_scene"] = json::parse(job.best_scene);
  }
  if (!job.error.empty()) body["error"] = job.error;
  body["history"] = history_json(job.history);
  return body;
}

void Service::routes() {
  server_->Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"status", "ok"}, {"version", kVersion}});
  });

  server_->Get("/api/scene", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(scene_mutex_);
    res.set_content(emit_scene_config(scene_), kJson);
  });

  server_->Put("/api/scene", [this](const httplib::Request& req, httplib::Response& res) {
    SceneConfig next;
    if (!parse_or_reject(req.body, res, next)) return;
    std::string canonical = emit_scene_config(next);
    {
      std::unique_lock lock(scene_mutex_);
      scene_ = std::move(next);
    }
    res.set_content(canonical, kJson);
  });

  server_->Post("/api/trace", [this](const httplib::Request& req, httplib::Response& res) {
    SceneConfig config;
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
      std::shared_lock lock(scene_mutex_);
      config = scene_;
    } else if (!parse_or_reject(req.body, res, config)) {
      return;
    }
    try {
      send(res, 200, trace_response(config.to_scene()));
    } catch (const std::exception& e) {
      send_error(res, 422, e.what());
    }
  });

  server_->Post("/api/optimize", [this](const httplib::Request& req, httplib::Response& res) {
    int budget = 2000;
    std::uint64_t seed = 1;
    if (req.body.find_first_not_of(" \t\r\n") != std::string::npos) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        send_error(res, 400, e.what());
        return;
      }
      if (!body.is_object()) return send_error(res, 400, "expected an object");
      for (const auto& item : body.items())
        if (item.key() != "budget" && item.key() != "seed")
          return send_error(res, 400, "unknown key", "/" + item.key());
      if (body.contains("budget")) {
        if (!body["budget"].is_number_integer()) return send_error(res, 400, "expected an integer", "/budget");
        budget = body["budget"].get<int>();
      }
      if (body.contains("seed")) {
        if (!body["seed"].is_number_unsigned()) return send_error(res, 400, "expected a non-negative integer", "/seed");
        seed = body["seed"].get<std::uint64_t>();
      }
    }
    SceneConfig base;
    {
      std::shared_lock lock(scene_mutex_);
      base = scene_;
    }
    const DesignVector initial = design_vector(base);
    if (budget < static_cast<int>(initial.free_count()) + 1)
      return send_error(res, 422, "budget must be at least " + std::to_string(initial.free_count() + 1), "/budget");

    std::lock_guard lock(jobs_mutex_);
    for (const auto& [id, job] : jobs_) {
      std::lock_guard job_lock(job->mutex);
      if (job->status == "running") return send_error(res, 409, "optimization job " + id + " is still running");
    }
    auto job = std::make_shared<Job>();
    job->id = std::to_string(next_job_++);
    job->budget = budget;
    job->seed = seed;
    jobs_[job->id] = job;
    job->worker = std::thread([this, job, base, initial] {
      DesignObjective objective;
      objective.envelope = base.envelope;
      try {
        const OptimizeResult r = optimize(initial, base, objective, job->budget, job->seed, [&](const HistoryEntry& h) {
          if (stopping_) throw Cancelled{};
          std::lock_guard l(job->mutex);
          job->history.push_back(h);
        });
        const std::string best = emit_scene_config(apply_design(base, r.best));
        std::lock_guard l(job->mutex);
        job->initial_score = r.initial_score;
        job->best_score = r.best_score;
        job->best_scene = best;
        job->status = "done";
      } catch (const Cancelled&) {
        std::lock_guard l(job->mutex);
        job->status = "cancelled";
      } catch (const std::exception& e) {
        std::lock_guard l(job->mutex);
        job->status = "failed";
        job->error = e.what();
      }
    });
    send(res, 202, {{"id", job->id}});
  });

  server_->Get(R"(/api/optimize/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::shared_ptr<Job> job;
    {
      std::lock_guard lock(jobs_mutex_);
      const auto it = jobs_.find(req.matches[1].str());
      if (it != jobs_.end()) job = it->second;
    }
    if (!job) return send_error(res, 404, "unknown optimization job " + req.matches[1].str());
    send(res, 200, job_record(*job));
  });

  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });
}

}  // namespace tfold
