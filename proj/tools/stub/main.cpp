#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "stub_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Chat-completions stub that realizes dialogue scripts deterministically"};
    std::string host = "127.0.0.1";
    int port = 8089;
    std::string model = "stub-model";
    std::string key_env;
    app.add_option("--host", host, "Address to bind");
    app.add_option("--port", port, "Port to bind");
    app.add_option("--model", model, "Model id reported in responses");
    app.add_option("--api-key-env", key_env, "Require the key held in this environment variable");
    CLI11_PARSE(app, argc, argv);

    dialogen::stub::Server server(model);
    if (!key_env.empty()) {
        const char* key = std::getenv(key_env.c_str());
        if (key == nullptr) {
            std::cerr << key_env << " is not set\n";
            return 2;
        }
        server.handler().require_key(key);
    }
    std::cout << "serving http://" << host << ":" << port << "/v1/chat/completions" << std::endl;
    try {
        server.serve(host, port);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
