#pragma once

// HTTP front end for the analyze layer:
//   POST /api/analyze   AnalyzeRequest JSON -> AnalyzeResponse JSON
//   GET  /api/health    {"status": "ok", "engine_version": ...}
// Handlers are stateless; the listener runs a thread pool.

#include <memory>
#include <string>

namespace powerwb {

// Port used when none is given: $POWERWB_PORT if set and valid, else 8080.
int default_port();

class Service {
public:
    Service();
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds the listening socket; port 0 picks an ephemeral port. Returns
    // false on failure.
    bool bind(const std::string& host, int port);

    // Port actually bound, or -1 before a successful bind.
    int port() const;

    // Serves until stop() is called. Requires a successful bind(); returns true
    // at once if stop() already ran.
    bool listen();

    // Blocks until listen() is accepting connections or has failed.
    void wait_until_ready() const;

    // Closes the socket. Safe from any thread, before or during listen().
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace powerwb
