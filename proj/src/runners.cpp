#include "sega/runners.hpp"

#include <stdlib.h>

#include <fstream>
#include <regex>

#include <json.hpp>

#include "sega/error.hpp"
#include "sega/process.hpp"

namespace sega::runners {

namespace {

using nlohmann::json;

struct ScratchDir {
  std::filesystem::path path;

  explicit ScratchDir(const char* label) {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / label).string() + "XXXXXX";
    if (::mkdtemp(tmpl.data()) == nullptr) {
      raise(ErrorKind::io, "cannot create scratch directory");
    }
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
};

void copy_into(const std::filesystem::path& src,
               const std::filesystem::path& dst) {
  std::error_code ec;
  std::filesystem::copy_file(
      src, dst, std::filesystem::copy_options::overwrite_existing, ec);
  if (ec) raise(ErrorKind::io, "cannot copy " + src.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << text;
}

std::size_t to_count(const std::string& digits) {
  return static_cast<std::size_t>(std::stoull(digits));
}

RunnerCounts parse_doctest(std::string_view raw) {
  static const std::regex summary(R"((\d+) passed and (\d+) failed\.)");
  std::cmatch m;
  if (std::regex_search(raw.begin(), raw.end(), m, summary)) {
    return {to_count(m[1]), to_count(m[2]), 0};
  }
  raise(ErrorKind::parse, "no doctest summary line found in: " +
                              std::string(raw.substr(0, 200)));
}

RunnerCounts parse_unittest(std::string_view raw) {
  static const std::regex ran(R"(Ran (\d+) tests? in)");
  std::cmatch m;
  if (!std::regex_search(raw.begin(), raw.end(), m, ran)) {
    raise(ErrorKind::parse, "no unittest summary line found in: " +
                                std::string(raw.substr(0, 200)));
  }
  const std::size_t total = to_count(m[1]);
  std::size_t failures = 0;
  std::size_t errors = 0;
  std::size_t skipped = 0;
  static const std::regex fail_re(R"(failures=(\d+))");
  static const std::regex err_re(R"(errors=(\d+))");
  static const std::regex skip_re(R"(skipped=(\d+))");
  if (std::regex_search(raw.begin(), raw.end(), m, fail_re)) failures = to_count(m[1]);
  if (std::regex_search(raw.begin(), raw.end(), m, err_re)) errors = to_count(m[1]);
  if (std::regex_search(raw.begin(), raw.end(), m, skip_re)) skipped = to_count(m[1]);
  const std::size_t not_passed = failures + errors + skipped;
  if (not_passed > total) {
    raise(ErrorKind::parse, "unittest summary counts are inconsistent");
  }
  return {total - not_passed, failures + errors, skipped};
}

RunnerCounts parse_cargo(std::string_view raw) {
  static const std::regex summary(
      R"(test result: \w+\. (\d+) passed; (\d+) failed; (\d+) ignored;)");
  RunnerCounts counts;
  bool found = false;
  auto begin = std::cregex_iterator(raw.begin(), raw.end(), summary);
  for (auto it = begin; it != std::cregex_iterator(); ++it) {
    counts.passed += to_count((*it)[1]);
    counts.failed += to_count((*it)[2]);
    counts.ignored += to_count((*it)[3]);
    found = true;
  }
  if (!found) {
    raise(ErrorKind::parse, "no cargo test summary line found in: " +
                                std::string(raw.substr(0, 200)));
  }
  return counts;
}

TestOutcome timed_out_outcome(RunnerKind kind, std::string raw) {
  TestOutcome outcome;
  outcome.runner_kind = kind;
  outcome.compiled = std::nullopt;
  outcome.file_pass = false;
  outcome.timed_out = true;
  outcome.raw_output = std::move(raw);
  return outcome;
}

}  // namespace

RunnerKind runner_kind_from_string(const std::string& name) {
  if (name == "doctest" || name == "doctest_runner") return RunnerKind::doctest_runner;
  if (name == "unittest" || name == "unittest_runner") return RunnerKind::unittest_runner;
  if (name == "cargo" || name == "cargo_test_runner") return RunnerKind::cargo_test_runner;
  raise(ErrorKind::format, "unknown runner kind: " + name);
}

std::string to_string(RunnerKind kind) {
  switch (kind) {
    case RunnerKind::doctest_runner: return "doctest_runner";
    case RunnerKind::unittest_runner: return "unittest_runner";
    case RunnerKind::cargo_test_runner: return "cargo_test_runner";
  }
  return "?";
}

bool toolchain_available(RunnerKind kind) {
  switch (kind) {
    case RunnerKind::doctest_runner:
    case RunnerKind::unittest_runner:
      return program_available("python3");
    case RunnerKind::cargo_test_runner:
      return program_available("cargo");
  }
  return false;
}

RunnerCounts parse_runner_output(std::string_view raw, RunnerKind kind) {
  if (raw.empty()) raise(ErrorKind::parse, "empty runner output");
  switch (kind) {
    case RunnerKind::doctest_runner: return parse_doctest(raw);
    case RunnerKind::unittest_runner: return parse_unittest(raw);
    case RunnerKind::cargo_test_runner: return parse_cargo(raw);
  }
  raise(ErrorKind::parse, "unknown runner kind");
}

TestOutcome run_native_tests(const std::filesystem::path& code_path,
                             RunnerKind kind, int timeout_s) {
  if (!toolchain_available(kind)) {
    raise(ErrorKind::environment,
          "toolchain for " + to_string(kind) + " is not installed");
  }
  if (!std::filesystem::exists(code_path)) {
    raise(ErrorKind::io, "code file does not exist: " + code_path.string());
  }

  ScratchDir scratch("sega-runner-");
  TestOutcome outcome;
  outcome.runner_kind = kind;

  if (kind == RunnerKind::doctest_runner || kind == RunnerKind::unittest_runner) {
    const bool is_unittest = kind == RunnerKind::unittest_runner;
    const std::string module = is_unittest ? "gen_test" : "gen";
    copy_into(code_path, scratch.path / (module + ".py"));

    ProcessResult compile = run_process(
        {"python3", "-m", "py_compile", module + ".py"}, scratch.path, timeout_s);
    if (compile.timed_out) return timed_out_outcome(kind, compile.err);
    if (compile.exit_code != 0) {
      outcome.compiled = false;
      outcome.raw_output = compile.err;
      return outcome;
    }
    outcome.compiled = true;

    ProcessResult run =
        is_unittest
            ? run_process({"python3", "-m", "unittest", "-v", module},
                          scratch.path, timeout_s)
            : run_process({"python3", "-m", "doctest", "-v", module + ".py"},
                          scratch.path, timeout_s);
    if (run.timed_out) return timed_out_outcome(kind, run.out + run.err);
    outcome.raw_output = run.out + run.err;
    const RunnerCounts counts = parse_runner_output(outcome.raw_output, kind);
    outcome.individual_passed = counts.passed;
    outcome.individual_failed = counts.failed;
    outcome.individual_ignored = counts.ignored;
    outcome.file_pass = run.exit_code == 0;
    outcome.no_tests = counts.passed + counts.failed == 0;
    return outcome;
  }

  // cargo: wrap the file as a one-crate library project.
  std::filesystem::create_directories(scratch.path / "src");
  copy_into(code_path, scratch.path / "src" / "lib.rs");
  write_text(scratch.path / "Cargo.toml",
             "[package]\n"
             "name = \"generated\"\n"
             "version = \"0.1.0\"\n"
             "edition = \"2021\"\n");
  ProcessResult run = run_process(
      {"env", "CARGO_TERM_COLOR=never", "cargo", "test", "--offline"},
      scratch.path, timeout_s);
  if (run.timed_out) return timed_out_outcome(kind, run.out + run.err);
  outcome.raw_output = run.out + run.err;
  const bool has_summary =
      outcome.raw_output.find("test result:") != std::string::npos;
  if (!has_summary) {
    outcome.compiled = false;  // build error before any test ran
    outcome.file_pass = false;
    return outcome;
  }
  outcome.compiled = true;
  const RunnerCounts counts = parse_runner_output(outcome.raw_output, kind);
  outcome.individual_passed = counts.passed;
  outcome.individual_failed = counts.failed;
  outcome.individual_ignored = counts.ignored;
  outcome.file_pass = run.exit_code == 0;
  outcome.no_tests = counts.passed + counts.failed == 0;
  return outcome;
}

void write_outcome_json(const std::filesystem::path& run_dir,
                        std::size_t run_index, const TestOutcome& outcome) {
  std::string prefix = std::to_string(run_index);
  if (prefix.size() < 2) prefix = "0" + prefix;
  json j{
      {"run", run_index},
      {"runner", to_string(outcome.runner_kind)},
      {"compiled", outcome.compiled.has_value() ? json(*outcome.compiled)
                                                : json(nullptr)},
      {"file_pass", outcome.file_pass},
      {"individual_passed", outcome.individual_passed},
      {"individual_failed", outcome.individual_failed},
      {"individual_ignored", outcome.individual_ignored},
      {"timed_out", outcome.timed_out},
      {"no_tests", outcome.no_tests},
      {"raw_output", outcome.raw_output},
  };
  std::ofstream out(run_dir / (prefix + "_outcome.json"),
                    std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write outcome json");
  out << j.dump(2) << "\n";
}

}  // namespace sega::runners
