#pragma once

#include "psrom/planner_service.hpp"

namespace httplib {
class Server;
}

namespace psrom {

/// Binds the planner routes:
///   POST   /models                 create_model
///   GET    /models/{id}/lesions    list_lesions
///   POST   /models/{id}/evaluate   evaluate_plan
///   GET    /models/{id}/traces     traces (optional ?path=N)
///   DELETE /models/{id}            delete_model
/// All bodies are JSON. `service` must outlive the server.
void register_routes(httplib::Server& server, PlannerService& service);

}  // namespace psrom
