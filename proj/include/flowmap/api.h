#pragma once

#include "flowmap/workbench.h"

#include <string>

// HTTP JSON API under /api/v1. Errors are {"code", "message", "detail"}.

namespace flowmap::service {

struct ApiRequest {
  std::string method; // GET, POST, PUT
  std::string path;   // without query string
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body; // canonical JSON
};

class Api {
public:
  explicit Api(Workbench& wb) : wb_(wb) {}

  /// Routes one request. Never throws; failures map to 4xx/5xx bodies.
  ApiResponse handle(const ApiRequest& req);

private:
  ApiResponse route(const ApiRequest& req);
  Workbench& wb_;
};

/// HTTP status for an error code ("not_found" -> 404 and so on).
int status_for(const std::string& code);

/// Blocks serving the API until the process is stopped.
void serve(Workbench& wb, const std::string& host, int port);

} // namespace flowmap::service
