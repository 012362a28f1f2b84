#pragma once

#include <array>
#include <cstdio>
#include <string>

#include <sys/wait.h>

#ifndef CLIMOE_EXE
#error "CLIMOE_EXE must name the climoe executable"
#endif

namespace fixtures {

struct CliResult {
    int status = -1;
    std::string output;  // stdout and stderr interleaved
};

// Runs `climoe <args>` through the shell. `env` is prepended verbatim.
inline CliResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(CLIMOE_EXE) + "' " + args + " 2>&1";
    CliResult r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    while (auto n = std::fread(buf.data(), 1, buf.size(), p)) r.output.append(buf.data(), n);
    const int st = ::pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

}  // namespace fixtures
