#include "twinpose/service.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <stdexcept>

#include <httplib.h>

#include "twinpose/commands.hpp"

namespace twinpose {

namespace fs = std::filesystem;

namespace {

constexpr const char* kJsonType = "application/json";

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(Json{{"error", message}}.dump(), kJsonType);
}

void send_json(httplib::Response& res, const std::string& body) { res.set_content(body, kJsonType); }

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

Service* g_running = nullptr;

void on_signal(int) {
  if (g_running) g_running->stop();
}

}  // namespace

void ServiceConfig::validate() const {
  if (port < 1 || port > 65535) throw std::invalid_argument("port must be in [1, 65535], got " + std::to_string(port));
  if (!fs::is_directory(dataset_root)) {
    throw std::invalid_argument("dataset root is not a directory: " + dataset_root.string());
  }
}

int resolve_port(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TWINPOSE_PORT"); env && *env) {
    std::size_t used = 0;
    const std::string text(env);
    int port = 0;
    try {
      port = std::stoi(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size()) throw std::invalid_argument("TWINPOSE_PORT is not an integer: " + text);
    return port;
  }
  return kDefaultPort;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  config_.validate();
  dataset_ = load_dataset(config_.dataset_root);
  for (const auto& frame : dataset_.frames) {
    auto slot = std::make_unique<Slot>();
    slot->path = frame.path;
    slot->current = std::make_shared<const AnnotationSet>(frame.annotations);
    slots_.emplace(frame.id, std::move(slot));
  }
  routes();
}

Service::~Service() { stop(); }

std::shared_ptr<const AnnotationSet> Service::snapshot(const std::string& frame_id) const {
  const auto it = slots_.find(frame_id);
  if (it == slots_.end()) return nullptr;
  return std::atomic_load(&it->second->current);
}

void Service::routes() {
  auto& srv = *server_;
  // The library default is SO_REUSEPORT, which lets a second instance share
  // a busy port; keep only SO_REUSEADDR so startup fails instead.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  if (fs::is_directory(config_.dataset_root / "images")) {
    srv.set_mount_point("/images", (config_.dataset_root / "images").string());
  }

  srv.Get("/scenes", [this](const httplib::Request&, httplib::Response& res) {
    Json ids = Json::array();
    for (const auto& [id, slot] : slots_) ids.push_back(id);
    send_json(res, Json{{"scenes", ids}}.dump());
  });

  srv.Get(R"(/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto set = snapshot(id);
    if (!set) return send_error(res, 404, "unknown scene '" + id + "'");
    // Full precision: annotations must survive a GET/PUT cycle unchanged.
    send_json(res, Json{{"id", id}, {"annotation", annotations_to_json(*set)}, {"image_url", "/" + set->image}}.dump());
  });

  srv.Put(R"(/scenes/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
    if (config_.read_only) return send_error(res, 403, "service is read-only");
    const std::string id = req.matches[1];
    const auto it = slots_.find(id);
    if (it == slots_.end()) return send_error(res, 404, "unknown scene '" + id + "'");
    const auto body = parse_body(req, res);
    if (!body) return;
    AnnotationSet set;
    try {
      set = annotations_from_json(*body);
    } catch (const SchemaError& e) {
      return send_error(res, 400, e.pointer() + ": " + e.what());
    } catch (const DataError& e) {
      return send_error(res, 400, e.what());
    }
    const auto diags = validate(set, dataset_.registry);
    if (has_errors(diags)) {
      std::string message;
      for (const auto& d : diags) {
        if (d.severity == Severity::kError) message += (message.empty() ? "" : "; ") + d.to_string();
      }
      return send_error(res, 400, message);
    }
    Slot& slot = *it->second;
    {
      std::lock_guard lock(slot.write_mutex);
      try {
        write_annotations(set, slot.path);
      } catch (const std::exception& e) {
        return send_error(res, 500, e.what());
      }
      std::atomic_store(&slot.current, std::shared_ptr<const AnnotationSet>(std::make_shared<AnnotationSet>(set)));
    }
    send_json(res, Json{{"id", id}, {"saved", true}}.dump());
  });

  srv.Get("/models", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, dataset_.registry.to_json().dump());
  });

  srv.Get(R"(/models/([^/]+)/wireframe)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!dataset_.registry.contains(id)) return send_error(res, 404, "unknown model '" + id + "'");
    const auto mesh = dataset_.registry.mesh(id);
    Json vertices = Json::array();
    for (const auto& v : mesh->vertices) vertices.push_back(Json::array({v.x(), v.y(), v.z()}));
    Json edge_list = Json::array();
    for (const auto& e : edges(*mesh)) edge_list.push_back(Json::array({e.a, e.b}));
    send_json(res, dump_fixed(Json{{"vertices", vertices}, {"edges", edge_list}}));
  });

  srv.Post("/project", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    try {
      send_json(res, dump_fixed(handle_project(*body, dataset_.registry)));
    } catch (const RequestError& e) {
      send_error(res, 400, e.what());
    }
  });

  srv.Post("/solve", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    try {
      send_json(res, dump_fixed(handle_solve(*body, dataset_.registry)));
    } catch (const RequestError& e) {
      send_error(res, 400, e.what());
    }
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "unknown error");
    }
  });
}

bool Service::bind() {
  if (!server_->bind_to_port(config_.host, config_.port)) return false;
  port_ = config_.port;
  return true;
}

int Service::bind_any_port() {
  port_ = server_->bind_to_any_port(config_.host);
  return port_;
}

bool Service::listen() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

int serve(const ServiceConfig& config, std::ostream& err) {
  try {
    Service service(config);
    if (!service.bind()) {
      err << "error: cannot bind " << config.host << ":" << config.port << " (port busy?)\n";
      return kExitInvalid;
    }
    err << "serving " << config.dataset_root.string() << " on http://" << config.host << ":" << service.port()
        << (config.read_only ? " (read-only)" : "") << "\n";
    g_running = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const bool ok = service.listen();
    g_running = nullptr;
    return ok ? kExitOk : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace twinpose
