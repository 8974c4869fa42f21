// psrom-server: HTTP planning service over the response-surface store.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "psrom/http_api.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order FFR planning service"};

  auto env = [](const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
  };
  std::string listen = env("PSROM_LISTEN", "127.0.0.1:8080");
  psrom::PlannerConfig config;
  config.store_dir = env("PSROM_STORE_DIR", "");
  config.max_models = std::stoul(env("PSROM_MAX_MODELS", "32"));
  config.solver.tol2 = std::stod(env("PSROM_TOL2", "0.02"));

  app.add_option("--listen", listen, "host:port (env PSROM_LISTEN)");
  app.add_option("--store-dir", config.store_dir, "Persist surfaces here (env PSROM_STORE_DIR)");
  app.add_option("--max-models", config.max_models, "In-memory LRU bound (env PSROM_MAX_MODELS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol2", config.solver.tol2, "ROM convergence tolerance (env PSROM_TOL2)");
  app.add_option("--max-iterations", config.solver.max_iterations, "ROM iteration cap");
  CLI11_PARSE(app, argc, argv);

  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "error: --listen expects host:port\n";
    return 2;
  }
  const std::string host = listen.substr(0, colon);
  const int port = std::stoi(listen.substr(colon + 1));

  try {
    psrom::PlannerService service(config);
    httplib::Server server;
    psrom::register_routes(server, service);
    std::cerr << "listening on " << host << ':' << port << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot bind " << listen << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
