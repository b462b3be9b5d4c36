#pragma once

// Read-only HTTP access to a directory of flow-graph files, plus static hosting of the
// walkthrough UI bundle.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "procmine/corpus.hpp"
#include "procmine/error.hpp"

namespace procmine {

// Stateless view of a flows directory: every request rereads the files.
class FlowStore {
 public:
  explicit FlowStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  // Ids are file stems; anything else could address files outside the directory.
  static bool valid_id(std::string_view id) {
    if (id.empty() || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
             c == '.';
    });
  }

  // [{id, title, source}] sorted by id. Files that are not flow graphs (the run report, stray
  // JSON) are skipped.
  nlohmann::json list() const {
    nlohmann::json out = nlohmann::json::array();
    if (!std::filesystem::is_directory(dir_)) return out;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(f));
      } catch (const std::exception& e) {
        std::cerr << "serve: skipping " << f.string() << ": " << e.what() << '\n';
        continue;
      }
      if (!j.is_object() || !j.contains("nodes") || !j.contains("source")) continue;
      out.push_back({{"id", f.stem().string()}, {"title", j.value("title", std::string())}, {"source", j.at("source")}});
    }
    return out;
  }

  // File contents verbatim; nullopt when the id is unknown. Throws IoError when the file
  // exists but cannot be read.
  std::optional<std::string> flow(std::string_view id) const {
    if (!valid_id(id)) return std::nullopt;
    const auto path = dir_ / (std::string(id) + ".json");
    if (!std::filesystem::is_regular_file(path)) return std::nullopt;
    return read_file(path);
  }

 private:
  std::filesystem::path dir_;
};

inline void install_routes(httplib::Server& server, const FlowStore& store,
                           const std::filesystem::path& ui_dir = {}) {
  const auto json_error = [](httplib::Response& res, int status, const std::string& code) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", code}}.dump(), "application/json");
  };

  server.Get("/api/procedures", [&store, json_error](const httplib::Request&, httplib::Response& res) {
    try {
      res.set_content(store.list().dump(), "application/json");
    } catch (const std::exception& e) {
      std::cerr << "serve: listing failed: " << e.what() << '\n';
      json_error(res, 500, "unreadable");
    }
  });

  server.Get(R"(/api/procedures/([^/]+)/flow)", [&store, json_error](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      if (auto body = store.flow(id)) {
        res.set_content(*body, "application/json");
      } else {
        json_error(res, 404, "not_found");
      }
    } catch (const std::exception& e) {
      std::cerr << "serve: cannot read flow '" << id << "': " << e.what() << '\n';
      json_error(res, 500, "unreadable");
    }
  });

  // Preflight for local development against a separately served UI.
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });

  // Unmatched API paths get the JSON error body too.
  server.set_error_handler([json_error](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && req.path.rfind("/api/", 0) == 0) json_error(res, 404, "not_found");
  });

  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir)) server.set_mount_point("/", ui_dir.string());
}

// Blocks until the server stops. `bind` is "host:port".
inline void serve(const std::filesystem::path& flows_dir, const std::string& bind,
                  const std::filesystem::path& ui_dir = {}) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "bind address must be host:port");
  const auto host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad port in '" + bind + "'");
  }
  if (!std::filesystem::is_directory(flows_dir)) {
    throw Error(ErrorCode::IoError, "flows directory '" + flows_dir.string() + "' does not exist");
  }
  FlowStore store(flows_dir);
  httplib::Server server;
  install_routes(server, store, ui_dir);
  std::cerr << "serving " << flows_dir.string() << " on http://" << bind << '\n';
  if (!server.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + bind);
}

}  // namespace procmine
