#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "sega/corpus.hpp"
#include "sega/error.hpp"
#include "sega/extraction.hpp"

using namespace sega;
using namespace sega::corpus;

namespace {

const std::filesystem::path kFixtures{SEGA_FIXTURE_DIR};

std::filesystem::path write_temp(const std::string& stem, const std::string& ext,
                                 const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "sega-corpus-tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / (stem + ext);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

TEST_SUITE_BEGIN("corpus");

TEST_CASE("v2d7 c1 corpus loads with denominator 73") {
  const TestCorpus corpus = load_corpus(kFixtures / "corpora" / "v2d7_c1.json");
  CHECK(corpus.denominator == 73);
  CHECK(corpus.cases.size() == 73);
  CHECK(corpus.target_language == Language::python);
  CHECK(corpus.cases.front().marker_kind == MarkerKind::doctest_chevron);
}

TEST_CASE("c2, c3, and rust corpora load with their denominators") {
  CHECK(load_corpus(kFixtures / "corpora" / "v2d7_c2.json").denominator == 26);
  CHECK(load_corpus(kFixtures / "corpora" / "v2d7_c3.json").denominator == 26);
  CHECK(load_corpus(kFixtures / "corpora" / "rust_28.json").denominator == 28);
}

TEST_CASE("every case offset round-trips through the marker scan") {
  for (const char* name : {"v2d7_c1", "v2d7_c2", "v2d7_c3", "rust_28"}) {
    const TestCorpus corpus =
        load_corpus(kFixtures / "corpora" / (std::string(name) + ".json"));
    const MarkerSpec spec =
        marker_spec_for(corpus.target_language, corpus.cases.front().marker_kind);
    const auto scan = extraction::scan_markers(corpus.full_text, spec);
    REQUIRE(scan.count == corpus.denominator);
    for (const TestCase& tc : corpus.cases) {
      const std::size_t line = line_of_offset(corpus.full_text, tc.byte_start);
      const bool found = std::find(scan.line_numbers.begin(),
                                   scan.line_numbers.end(),
                                   line) != scan.line_numbers.end();
      CHECK(found);
    }
  }
}

TEST_CASE("degenerate and malformed manifests are rejected") {
  write_temp("empty", ".txt", "no markers here\n");
  const auto manifest = write_temp(
      "empty", ".json",
      R"({"target_language":"python","denominator":0,"cases":[]})");
  CHECK(kind_of([&] { load_corpus(manifest); }) == ErrorKind::validation);

  write_temp("broken", ".txt", "");
  const auto malformed = write_temp("broken", ".json", "{not json");
  CHECK(kind_of([&] { load_corpus(malformed); }) == ErrorKind::format);
}

TEST_CASE("offset pointing at non-marker text names the failing index") {
  write_temp("badoff", ".txt", "    >>> ok()\n    plain line\n");
  const auto manifest = write_temp(
      "badoff", ".json",
      R"({"target_language":"python","denominator":1,"cases":[
           {"identifier":"x","marker_kind":"doctest_chevron",
            "byte_start":0,"byte_end":5}]})");
  try {
    load_corpus(manifest);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("logical_index 0") != std::string::npos);
  }
}

TEST_CASE("marker specs match their line shapes") {
  const MarkerSpec doctest = marker_spec_for(Language::python, MarkerKind::doctest_chevron);
  CHECK(extraction::scan_markers("    >>> pq = DHeap(4)\nplain\n>>>x\n", doctest).count == 2);
  CHECK(extraction::scan_markers("text >>> not at start\n", doctest).count == 0);

  const MarkerSpec unittest_m = marker_spec_for(Language::python, MarkerKind::unittest_method);
  CHECK(extraction::scan_markers("    def test_pop(self):\n    def helper():\n", unittest_m).count == 1);

  const MarkerSpec rust = marker_spec_for(Language::rust, MarkerKind::rust_test_attr);
  CHECK(extraction::scan_markers("    #[test]\n    fn x() {}\n#[test]\n", rust).count == 2);

  const MarkerSpec zig = marker_spec_for(Language::zig, MarkerKind::zig_test_block);
  CHECK(extraction::scan_markers("test \"insert works\" {\n", zig).count == 1);

  const MarkerSpec gtest = marker_spec_for(Language::cpp, MarkerKind::gtest_macro);
  CHECK(extraction::scan_markers("TEST(Heap, Insert) {\nTEST_F(HeapFix, Pop) {\n", gtest).count == 2);

  const MarkerSpec vitest = marker_spec_for(Language::typescript, MarkerKind::vitest_call);
  CHECK(extraction::scan_markers("test('inserts', () => {\nit('pops', () => {\n", vitest).count == 2);

  const MarkerSpec gotest = marker_spec_for(Language::go, MarkerKind::go_test_func);
  CHECK(extraction::scan_markers("func TestInsert(t *testing.T) {\n", gotest).count == 1);
  CHECK(extraction::scan_markers("  func TestIndented(t *testing.T) {\n", gotest).count == 0);
}

TEST_CASE("unsupported language/marker pair is a capability error") {
  CHECK(kind_of([] { marker_spec_for(Language::python, MarkerKind::rust_test_attr); }) ==
        ErrorKind::capability);
  CHECK(kind_of([] { marker_spec_for(Language::rust, MarkerKind::doctest_chevron); }) ==
        ErrorKind::capability);
}

TEST_CASE("baseline render is exactly the task description") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement a d-ary heap priority queue.";
  tmpl.condition = {ConditionKind::baseline, ""};
  CHECK(render_prompt(tmpl) == tmpl.task_description);
}

TEST_CASE("rendering is deterministic") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement the module.";
  tmpl.condition = {ConditionKind::c1_inline, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c1.json");
  CHECK(render_prompt(tmpl) == render_prompt(tmpl));
}

TEST_CASE("c2 render places the 26-method test class after the stub") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement the module.";
  tmpl.condition = {ConditionKind::c2_samefile, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c2.json");
  const std::string prompt = render_prompt(tmpl);

  const MarkerSpec spec = marker_spec_for(Language::python, MarkerKind::unittest_method);
  CHECK(extraction::scan_markers(prompt, spec).count == 26);
  const std::size_t impl_pos = prompt.find("class DHeap");
  const std::size_t tests_pos = prompt.find("class TestHeap");
  REQUIRE(impl_pos != std::string::npos);
  REQUIRE(tests_pos != std::string::npos);
  CHECK(impl_pos < tests_pos);
}

TEST_CASE("c3 render: second section opens with the import reference") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement the module.";
  tmpl.condition = {ConditionKind::c3_sidecar, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c3.json");
  const std::string prompt = render_prompt(tmpl);

  const std::size_t impl_section = prompt.find("## File: heap.py");
  const std::size_t test_section = prompt.find("## File: test_heap.py");
  REQUIRE(impl_section != std::string::npos);
  REQUIRE(test_section != std::string::npos);
  CHECK(impl_section < test_section);

  // First non-comment line inside the second section's fence is the import.
  const std::size_t fence = prompt.find("```python\n", test_section);
  REQUIRE(fence != std::string::npos);
  std::istringstream body(prompt.substr(fence + 10));
  std::string line;
  while (std::getline(body, line)) {
    if (line.empty() || line[0] == '#') continue;
    CHECK(line == "from heap import DHeap, Item");
    break;
  }
}

TEST_CASE("c1/c2/c3 renders carry the same logical assertion set") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement the module.";

  tmpl.condition = {ConditionKind::c1_inline, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c1.json");
  const auto chevrons = marker_spec_for(Language::python, MarkerKind::doctest_chevron);
  CHECK(extraction::scan_markers(render_prompt(tmpl), chevrons).count == 73);

  const auto methods = marker_spec_for(Language::python, MarkerKind::unittest_method);
  tmpl.condition = {ConditionKind::c2_samefile, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c2.json");
  CHECK(extraction::scan_markers(render_prompt(tmpl), methods).count == 26);

  tmpl.condition = {ConditionKind::c3_sidecar, ""};
  tmpl.corpus_slot = load_corpus(kFixtures / "corpora" / "v2d7_c3.json");
  CHECK(extraction::scan_markers(render_prompt(tmpl), methods).count == 26);
}

TEST_CASE("test-bearing condition without a corpus is a configuration error") {
  PromptTemplate tmpl;
  tmpl.task_description = "Implement the module.";
  for (ConditionKind kind : {ConditionKind::test_guided, ConditionKind::combined,
                             ConditionKind::c1_inline, ConditionKind::c2_samefile,
                             ConditionKind::c3_sidecar}) {
    tmpl.condition = {kind, ""};
    CHECK(kind_of([&] { render_prompt(tmpl); }) == ErrorKind::configuration);
  }
}

TEST_SUITE_END();
