#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace regraph {

struct RunSpec {
    std::vector<std::string> argv;
    std::string stdin_data;
    double timeout_s = 60.0;
    std::filesystem::path cwd;  // empty = inherit
};

struct RunResult {
    int exit_code = -1;
    bool timed_out = false;
    bool spawn_failed = false;
    std::string out;
    std::string err;
    double wall_s = 0.0;
};

// Runs a child process with captured stdio and a hard deadline. On timeout the
// whole process group is killed. Never throws for child failures; throws
// std::runtime_error only when the harness itself cannot operate (pipe/fork).
RunResult run_process(const RunSpec& spec);

}  // namespace regraph
