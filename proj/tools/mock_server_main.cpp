// Deterministic stand-in for a chat-completion service, for offline pipeline runs.
//   polypersona-mock-server --port 8089

#include <iostream>

#include <CLI11.hpp>

#include "mock_endpoint.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic mock chat-completion endpoint", "polypersona-mock-server"};
    std::string host = "127.0.0.1";
    int port = 8089;
    int delay_ms = 0;
    app.add_option("--host", host, "Address to bind")->capture_default_str();
    app.add_option("--port", port, "Port to listen on")->capture_default_str();
    app.add_option("--delay-ms", delay_ms, "Artificial latency per request")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    polypersona::mock::MockEndpoint endpoint({}, std::chrono::milliseconds(delay_ms));
    std::cerr << "listening on http://" << host << ':' << port << '\n';
    endpoint.serve_forever(host, port);
    return 0;
}
