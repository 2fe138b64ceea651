#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sega {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  bool timed_out = false;
};

// Runs argv[0] with the given arguments in `cwd`, capturing stdout/stderr.
// On timeout the child process group is killed and `timed_out` is set.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd, int timeout_s);

// True if `program` resolves on PATH and runs with `--version`.
bool program_available(const std::string& program);

}  // namespace sega
