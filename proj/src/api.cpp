#include "flowmap/api.h"

#include "flowmap/error.h"

#include <httplib.h>

#include <cstdio>

namespace flowmap::service {

using io::Json;

int status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "precondition_failed") return 409;
  if (code == "invalid_argument" || code == "parse_error" || code == "schema_error") return 400;
  return 500;
}

namespace {

ApiResponse reply(int status, const Json& body) { return {status, io::canonical(body)}; }

ApiResponse failure(const std::string& code, const std::string& message, const std::string& detail = {}) {
  return reply(status_for(code), {{"code", code}, {"message", message}, {"detail", detail}});
}

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < path.size()) {
    auto slash = path.find('/', pos);
    if (slash == std::string::npos) slash = path.size();
    if (slash > pos) out.push_back(path.substr(pos, slash - pos));
    pos = slash + 1;
  }
  return out;
}

Json body(const ApiRequest& req) {
  if (req.body.empty()) return Json::object();
  Json j = io::parse_json(req.body, "request body");
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  return j;
}

std::string field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw InvalidArgument(std::string("request needs string field '") + key + "'");
  return it->get<std::string>();
}

} // namespace

ApiResponse Api::handle(const ApiRequest& req) {
  try {
    return route(req);
  } catch (const Error& e) {
    return failure(e.code(), e.what(), e.detail());
  } catch (const std::exception& e) {
    return failure("internal", e.what());
  }
}

ApiResponse Api::route(const ApiRequest& req) {
  auto seg = segments(req.path);
  const auto& m = req.method;
  if (seg.size() < 3 || seg[0] != "api" || seg[1] != "v1" || seg[2] != "sessions")
    return failure("not_found", "no route for " + m + " " + req.path);
  seg.erase(seg.begin(), seg.begin() + 3);

  if (seg.empty()) {
    if (m == "GET") {
      Json list = Json::array();
      for (const auto& i : wb_.list_sessions()) list.push_back(info_json(i));
      return reply(200, {{"sessions", std::move(list)}});
    }
    if (m == "POST") {
      Json b = body(req);
      std::vector<fs::path> models;
      for (const auto& p : b.value("models", Json::array())) {
        if (!p.is_string()) throw InvalidArgument("models must be an array of paths");
        models.emplace_back(p.get<std::string>());
      }
      SessionOptions opts;
      if (b.contains("crypto")) opts.crypto = field(b, "crypto");
      if (b.contains("sources")) opts.sources = field(b, "sources");
      if (b.contains("sinks")) opts.sinks = field(b, "sinks");
      auto info = wb_.create_session(field(b, "corpus"), models, opts);
      Json out = info_json(info);
      out["suggestions"] = wb_.suggestions(info.id);
      return reply(201, out);
    }
    return failure("not_found", "no route for " + m + " " + req.path);
  }

  const std::string id = seg[0];
  const std::string what = seg.size() > 1 ? seg[1] : "";
  if (seg.size() == 1 && m == "GET") return reply(200, info_json(wb_.info(id)));
  if (seg.size() == 2 && m == "GET" && what == "suggestions") return reply(200, wb_.suggestions(id));
  if (seg.size() == 2 && m == "GET" && what == "violations") return reply(200, wb_.violations(id));
  if (seg.size() == 2 && m == "POST" && what == "decisions") {
    Json b = body(req);
    return reply(200, wb_.decide(id, field(b, "entryId"), mapping::decision_from_string(field(b, "decision"))));
  }
  if (seg.size() == 2 && m == "POST" && what == "mappings") {
    Json b = body(req);
    return reply(200, wb_.map(id, field(b, "dfd"), field(b, "pm")));
  }
  if (seg.size() == 2 && m == "POST" && what == "iterate") return reply(200, wb_.iterate(id));
  if (seg.size() == 3 && m == "POST" && what == "checks") {
    Json b = body(req);
    auto kind = check_kind_from_string(seg[2]);
    auto mode = b.contains("mode") ? taint::mode_from_string(field(b, "mode")) : taint::Mode::Plain;
    auto rep = wb_.check(id, kind, mode);
    Json out = rep.body;
    out["findings"] = rep.findings;
    return reply(200, out);
  }
  if (seg.size() == 2 && what == "crypto-list" && (m == "PUT" || m == "GET")) {
    if (m == "GET") return reply(200, {{"entries", io::to_json(wb_.load(id).crypto)}});
    auto list = wb_.update_crypto_list(id, io::crypto_list_from_json(io::parse_json(req.body, "request body")));
    return reply(200, {{"entries", io::to_json(list)}});
  }
  return failure("not_found", "no route for " + m + " " + req.path);
}

void serve(Workbench& wb, const std::string& host, int port) {
  Api api(wb);
  httplib::Server server;
  auto forward = [&api](const httplib::Request& req, httplib::Response& res) {
    auto out = api.handle({req.method, req.path, req.body});
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/api/v1/.*)", forward);
  server.Post(R"(/api/v1/.*)", forward);
  server.Put(R"(/api/v1/.*)", forward);
  std::fprintf(stderr, "serving %s on http://%s:%d/api/v1\n", wb.home().string().c_str(), host.c_str(), port);
  if (!server.listen(host, port)) throw Error("io_error", "cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace flowmap::service
