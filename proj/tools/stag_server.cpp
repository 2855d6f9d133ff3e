// HTTP front end for interactive annotation.
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "stag/annotation.hpp"

namespace {
httplib::Server* g_server = nullptr;
void stop(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annotation server: proposes internal structure for marked spans"};
  std::string model, host = "127.0.0.1", save_file = "annotations.tsv";
  int port = 8080;
  bool allow_write = false;
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags win");
  app.add_option("-m,--model", model, "Model file")->required()->check(CLI::ExistingFile);
  app.add_option("--host", host, "Bind address")->capture_default_str();
  app.add_option("-p,--port", port, "Port; 0 picks a free one")->capture_default_str()->check(CLI::Range(0, 65535));
  app.add_flag("--allow-write", allow_write, "Enable POST /v1/save");
  app.add_option("--save-file", save_file, "Columnar file that /v1/save appends to")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<std::filesystem::path> save;
    if (allow_write) save = save_file;
    stag::AnnotationService service(stag::Tagger::load(model), model, save);
    httplib::Server server;
    stag::mount_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    if (port == 0) port = server.bind_to_any_port(host);
    else if (!server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    if (port < 0) throw std::runtime_error("cannot bind " + host);
    std::cout << "listening on http://" << host << ':' << port << std::endl;
    if (!server.listen_after_bind()) throw std::runtime_error("server stopped with an error");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
