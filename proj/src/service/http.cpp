#include "matforge/service/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <iostream>

namespace matforge::service {

namespace {

void cors(httplib::Response& res)
{
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
}

void error_body(httplib::Response& res, int status, const std::string& message, const std::string& field)
{
    res.status = status;
    nlohmann::json j = {{"error", message}};
    if (!field.empty())
        j["field"] = field;
    res.set_content(j.dump(), "application/json");
}

} // namespace

void install_routes(httplib::Server& server, const RenderService& service)
{
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.set_content("ok", "text/plain");
    });
    server.Get("/presets", [&service](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.set_content(service.presets_json(), "application/json");
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.status = 204;
    });
    server.Post("/render", [&service](const httplib::Request& req, httplib::Response& res) {
        cors(res);
        try {
            const auto request = service.parse_request(req.body);
            res.set_content(RenderService::response_json(service.render(request)), "application/json");
        } catch (const ServiceError& e) {
            error_body(res, e.status(), e.what(), e.field());
        } catch (const std::exception& e) {
            error_body(res, 500, std::string("internal error: ") + e.what(), "");
        }
    });
}

void serve(const RenderService& service, const std::string& host, int port)
{
    httplib::Server server;
    install_routes(server, service);
    std::cerr << "serving on http://" << host << ":" << port << (service.has_model() ? "" : " (no neural model)")
              << std::endl;
    if (!server.listen(host, port))
        throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace matforge::service
