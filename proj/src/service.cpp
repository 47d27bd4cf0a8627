#include "painter/service.hpp"

#include <map>
#include <mutex>
#include <random>

#include <httplib.h>

#include "painter/png.hpp"

namespace painter {

using nlohmann::json;

json studio_meta(const std::vector<std::string>& classes) {
  json tasks = json::array();
  for (auto t : all_tasks()) tasks.push_back(task_name(t));
  json templates = json::array();
  for (const auto& t : prompt_templates())
    templates.push_back({{"task", task_name(t.task)}, {"scenario", t.scenario}, {"text", t.text}});
  return {{"classes", classes}, {"tasks", tasks}, {"templates", templates}, {"locationTags", location_tags()}};
}

namespace {

struct Record {
  Record(std::shared_ptr<const LanguageModel> m, Budgets b) : session(std::move(m), SamplingPolicy::greedy(), b) {}

  Session session;
  std::atomic<bool> busy{false};
  std::atomic<bool> cancel{false};
  std::mutex mu;  // guards snapshot and last_used
  Canvas snapshot;
  std::chrono::steady_clock::time_point last_used = std::chrono::steady_clock::now();

  Canvas canvas() {
    std::lock_guard lock(mu);
    return snapshot;
  }
  void touch() {
    std::lock_guard lock(mu);
    last_used = std::chrono::steady_clock::now();
  }
};

SamplingPolicy parse_policy(const json& j) {
  if (!j.is_object()) return SamplingPolicy::greedy();
  const auto kind = j.value("kind", std::string("greedy"));
  if (kind == "greedy") return SamplingPolicy::greedy();
  if (kind == "top-p") {
    const double p = j.value("p", 0.9);
    if (!(p > 0 && p <= 1)) throw ParseError("policy p must be in (0, 1]");
    return SamplingPolicy::top_p(p, j.value("seed", std::uint64_t{0}));
  }
  throw ParseError("unknown policy kind '" + kind + "'");
}

void json_error(httplib::Response& res, int status, const std::string& msg) {
  res.status = status;
  res.set_content(json{{"error", msg}}.dump(), "application/json");
}

}  // namespace

struct StudioService::Impl {
  std::shared_ptr<const LanguageModel> model;
  json meta;
  ServiceOptions opt;
  httplib::Server server;
  mutable std::mutex mu;  // guards sessions and id_rng
  std::map<std::string, std::shared_ptr<Record>> sessions;
  std::mt19937_64 id_rng{std::random_device{}()};

  std::shared_ptr<Record> find(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void evict(std::chrono::steady_clock::time_point now) {
    std::lock_guard lock(mu);
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::lock_guard rl(it->second->mu);
      if (!it->second->busy && now - it->second->last_used > opt.idle_timeout)
        it = sessions.erase(it);
      else
        ++it;
    }
  }

  void routes() {
    server.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(meta.dump(), "application/json");
    });

    server.Post("/api/session", [this](const httplib::Request&, httplib::Response& res) {
      evict(std::chrono::steady_clock::now());
      std::lock_guard lock(mu);
      if (sessions.size() >= opt.max_sessions) return json_error(res, 503, "session limit reached");
      char buf[17];
      std::string id;
      do {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng()));
        id = buf;
      } while (sessions.count(id));
      sessions.emplace(id, std::make_shared<Record>(model, opt.budgets));
      res.set_content(json{{"id", id}}.dump(), "application/json");
    });

    server.Delete(R"(/api/session/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu);
      auto it = sessions.find(req.matches[1]);
      if (it == sessions.end()) return json_error(res, 404, "unknown session");
      it->second->cancel = true;
      sessions.erase(it);
      res.set_content(json{{"deleted", true}}.dump(), "application/json");
    });

    server.Get(R"(/api/session/([0-9a-f]+)/canvas\.(png|ppm))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 auto rec = find(req.matches[1]);
                 if (!rec) return json_error(res, 404, "unknown session");
                 rec->touch();
                 const Canvas c = rec->canvas();
                 if (req.matches[2] == "png")
                   res.set_content(encode_png(c), "image/png");
                 else
                   res.set_content(encode_ppm(c), "image/x-portable-pixmap");
               });

    server.Delete(R"(/api/session/([0-9a-f]+)/command)", [this](const httplib::Request& req, httplib::Response& res) {
      auto rec = find(req.matches[1]);
      if (!rec) return json_error(res, 404, "unknown session");
      const bool running = rec->busy.load();
      if (running) rec->cancel = true;
      res.set_content(json{{"cancelled", running}}.dump(), "application/json");
    });

    server.Post(R"(/api/session/([0-9a-f]+)/command)", [this](const httplib::Request& req, httplib::Response& res) {
      auto rec = find(req.matches[1]);
      if (!rec) return json_error(res, 404, "unknown session");
      std::string text;
      SamplingPolicy policy;
      try {
        const auto body = json::parse(req.body);
        text = body.at("text").get<std::string>();
        policy = parse_policy(body.value("policy", json()));
        check_command(model->vocab(), text);
      } catch (const json::exception& e) {
        return json_error(res, 400, std::string("bad request: ") + e.what());
      } catch (const Error& e) {
        return json_error(res, 400, e.what());
      }
      bool expected = false;
      if (!rec->busy.compare_exchange_strong(expected, true)) return json_error(res, 409, "command in flight");
      rec->cancel = false;
      rec->touch();
      rec->session.set_policy(policy);
      res.set_header("Cache-Control", "no-cache");
      auto finished = std::make_shared<std::atomic<bool>>(false);
      res.set_chunked_content_provider(
          "text/event-stream",
          [rec, text, finished](std::size_t, httplib::DataSink& sink) {
            auto send = [&](const Event& e) {
              if (e.kind != Event::Kind::kText) {
                std::lock_guard lock(rec->mu);
                rec->snapshot = rec->session.canvas;
              }
              const auto line = "data: " + event_to_json(e) + "\n\n";
              if (!sink.write(line.data(), line.size())) rec->cancel = true;
            };
            try {
              run_command(rec->session, text, send, nullptr, &rec->cancel);
            } catch (const std::exception& e) {
              Event done;
              done.kind = Event::Kind::kDone;
              done.reason = std::string("error: ") + e.what();
              done.canvas_hash = canvas_hash(rec->session.canvas);
              send(done);
            }
            rec->touch();
            *finished = true;
            rec->busy = false;
            sink.done();
            return true;
          },
          [rec, finished](bool) {
            if (*finished) return;
            rec->touch();
            rec->busy = false;
          });
    });

    if (!opt.static_dir.empty()) server.set_mount_point("/", opt.static_dir);
  }
};

StudioService::StudioService(std::shared_ptr<const LanguageModel> model, json meta, ServiceOptions opt)
    : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  impl_->meta = std::move(meta);
  impl_->opt = std::move(opt);
  impl_->routes();
}

StudioService::~StudioService() { stop(); }

int StudioService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void StudioService::listen() { impl_->server.listen_after_bind(); }

void StudioService::stop() {
  if (impl_) impl_->server.stop();
}

std::size_t StudioService::session_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sessions.size();
}

void StudioService::evict_idle(std::chrono::steady_clock::time_point now) { impl_->evict(now); }

}  // namespace painter
