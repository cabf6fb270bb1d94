#pragma once

#include "matforge/service/render_service.hpp"

#include <string>

namespace httplib {
class Server;
}

namespace matforge::service {

// GET /health, GET /presets, POST /render (+ CORS preflight). Error bodies
// are JSON {"error": message, "field": name}.
void install_routes(httplib::Server& server, const RenderService& service);

// Blocks serving on host:port until the process is stopped.
void serve(const RenderService& service, const std::string& host, int port);

} // namespace matforge::service
