#include "psrom/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

namespace psrom {
namespace {

void send(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

void register_routes(httplib::Server& server, PlannerService& service) {
  server.Post("/models", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create_model(req.body));
  });
  server.Get(R"(/models/([0-9A-Za-z]+)/lesions)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.list_lesions(req.matches[1]));
  });
  server.Post(R"(/models/([0-9A-Za-z]+)/evaluate)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.evaluate_plan(req.matches[1], req.body));
  });
  server.Get(R"(/models/([0-9A-Za-z]+)/traces)", [&](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> path;
    if (req.has_param("path")) path = req.get_param_value("path");
    send(res, service.traces(req.matches[1], path));
  });
  server.Delete(R"(/models/([0-9A-Za-z]+))", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.delete_model(req.matches[1]));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    const nlohmann::json body = {{"error", {{"code", "internal"}, {"message", what}}}};
    res.set_content(body.dump(), "application/json");
  });
}

}  // namespace psrom
