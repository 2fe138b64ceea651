#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace sega::runners {

enum class RunnerKind { doctest_runner, unittest_runner, cargo_test_runner };

struct RunnerCounts {
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t ignored = 0;
};

struct TestOutcome {
  // nullopt when compilation status is unknown (timeout before completion).
  std::optional<bool> compiled;
  bool file_pass = false;
  std::size_t individual_passed = 0;
  std::size_t individual_failed = 0;
  std::size_t individual_ignored = 0;
  RunnerKind runner_kind = RunnerKind::doctest_runner;
  std::string raw_output;
  bool timed_out = false;
  bool no_tests = false;
};

RunnerKind runner_kind_from_string(const std::string& name);
std::string to_string(RunnerKind kind);

bool toolchain_available(RunnerKind kind);

// Copies the code file into a private scratch directory and runs the native
// test runner there. Test failures are data, not errors; only a missing
// toolchain or an unusable code path raises.
TestOutcome run_native_tests(const std::filesystem::path& code_path,
                             RunnerKind kind, int timeout_s = 120);

// Extracts pass/fail/ignore counts from a runner's summary lines.
//   doctest  "62 passed and 2 failed."
//   unittest "Ran 26 tests in 0.003s" + "OK (skipped=1)" / "FAILED (...)"
//   cargo    "test result: ok. 27 passed; 0 failed; 1 ignored; ..."
RunnerCounts parse_runner_output(std::string_view raw, RunnerKind kind);

// Writes `<NN>_outcome.json` next to the run artifacts.
void write_outcome_json(const std::filesystem::path& run_dir,
                        std::size_t run_index, const TestOutcome& outcome);

}  // namespace sega::runners
