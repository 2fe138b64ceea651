#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sega::corpus {

enum class Language { python, rust, go, cpp, typescript, zig };

enum class MarkerKind {
  doctest_chevron,
  rust_test_attr,
  unittest_method,
  zig_test_block,
  gtest_macro,
  vitest_call,
  go_test_func,
};

enum class ConditionKind {
  baseline,
  doc_guided,
  struct_guided,
  test_guided,
  combined,
  c1_inline,
  c2_samefile,
  c3_sidecar,
};

struct TestCase {
  std::string identifier;
  MarkerKind marker_kind;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::size_t logical_index = 0;
};

struct TestCorpus {
  Language target_language;
  std::vector<TestCase> cases;
  std::size_t denominator = 0;
  std::string full_text;
};

struct Condition {
  ConditionKind kind;
  std::string notes;  // assistance block for doc/struct-guided conditions
};

// Where a preservation denominator comes from when a spec is applied.
enum class DenominatorSource { manifest_field, case_count };

struct MarkerSpec {
  Language language;
  MarkerKind kind;
  std::string line_pattern;  // anchored ECMAScript regex, applied per line
  DenominatorSource denominator_source = DenominatorSource::manifest_field;
};

struct PromptTemplate {
  std::string task_description;
  Condition condition;
  std::optional<TestCorpus> corpus_slot;
  // Implementation file body for the sidecar layout's first section. When
  // empty a minimal module header is rendered instead.
  std::string implementation_stub;
};

// Loads `<name>.json` (manifest) plus the sibling `<name>.txt` (raw corpus
// text) and validates every case offset against the text.
TestCorpus load_corpus(const std::filesystem::path& manifest_path);

// Deterministic prompt rendering; see README for the per-condition layouts.
std::string render_prompt(const PromptTemplate& tmpl);

MarkerSpec marker_spec_for(Language language, MarkerKind kind);

// The literal(s) a test case's byte_start must point at.
std::vector<std::string> marker_literals(MarkerKind kind);

bool condition_requires_corpus(ConditionKind kind);

Language language_from_string(const std::string& name);
std::string to_string(Language language);
MarkerKind marker_kind_from_string(const std::string& name);
std::string to_string(MarkerKind kind);
ConditionKind condition_from_string(const std::string& name);
std::string to_string(ConditionKind kind);

// Canonical fence tag and file extension for generated code.
std::string fence_tag(Language language);
std::string file_extension(Language language);

}  // namespace sega::corpus
