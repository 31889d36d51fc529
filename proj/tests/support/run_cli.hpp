#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

namespace edgemargin::testing {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

/// Run a shell command, capturing stdout and the exit code.
inline CliResult run_command(const std::string& command) {
    CliResult result;
    FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + command);
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

} // namespace edgemargin::testing
