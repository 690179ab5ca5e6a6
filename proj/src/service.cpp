#include "powerwb/service.hpp"

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include "httplib.h"
#include "powerwb/analyze.hpp"

namespace powerwb {

int default_port() {
    if (const char* env = std::getenv("POWERWB_PORT")) {
        char* end = nullptr;
        const long port = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && port > 0 && port < 65536) return static_cast<int>(port);
    }
    return 8080;
}

struct Service::Impl {
    httplib::Server server;
    int port = -1;
    std::mutex mutex;
    bool listening = false;
    bool stopped = false;
};

Service::Service() : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which would let
    // a second instance silently share a port that is already in use.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.Post("/api/analyze", [](const httplib::Request& req, httplib::Response& res) {
        const auto outcome = analyze_body(req.body);
        res.status = outcome.http_status;
        res.set_content(outcome.body.dump(), "application/json");
    });
    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        const nlohmann::json body = {{"status", "ok"}, {"engine_version", engine_version()}};
        res.set_content(body.dump(), "application/json");
    });
    // The explorer UI is served from another origin during development.
    server.Options("/api/analyze", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    });
}

Service::~Service() { stop(); }

bool Service::bind(const std::string& host, int port) {
    if (impl_->stopped) return false;
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) return false;
        impl_->port = bound;
        return true;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    impl_->port = port;
    return true;
}

int Service::port() const { return impl_->port; }

bool Service::listen() {
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->stopped) return true;
        if (impl_->port < 0 || impl_->listening) return false;
        impl_->listening = true;
    }
    return impl_->server.listen_after_bind();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

// The server only closes its socket while running, so a stop that races ahead
// of listen() waits for it, and a socket that was bound but never served is
// closed by briefly running the listener.
void Service::stop() {
    bool was_listening = false;
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->stopped) return;
        impl_->stopped = true;
        was_listening = impl_->listening;
    }
    auto& server = impl_->server;
    if (was_listening) {
        server.wait_until_ready();
        server.stop();
    } else if (impl_->port >= 0) {
        std::thread drain([&server] { server.listen_after_bind(); });
        server.wait_until_ready();
        server.stop();
        drain.join();
    }
}

}  // namespace powerwb
