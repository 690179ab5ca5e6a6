#pragma once

// Runs a shell command and captures its exit status, stdout and stderr.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace proc {

struct Result {
    int status = -1;
    std::string out;
    std::string err;
};

inline Result run(const std::string& command) {
    char path[] = "/tmp/powerwb-stderr-XXXXXX";
    const int fd = mkstemp(path);
    if (fd < 0) throw std::runtime_error("mkstemp failed");
    close(fd);
    const std::string full = command + " 2>" + path;
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    Result r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream err(path);
    std::stringstream ss;
    ss << err.rdbuf();
    r.err = ss.str();
    std::remove(path);
    return r;
}

}  // namespace proc
