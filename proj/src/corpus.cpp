#include "sega/corpus.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sega/error.hpp"

namespace sega::corpus {

namespace {

using nlohmann::json;

const std::map<Language, std::string> kLanguageNames = {
    {Language::python, "python"},   {Language::rust, "rust"},
    {Language::go, "go"},           {Language::cpp, "cpp"},
    {Language::typescript, "typescript"}, {Language::zig, "zig"},
};

const std::map<MarkerKind, std::string> kMarkerNames = {
    {MarkerKind::doctest_chevron, "doctest_chevron"},
    {MarkerKind::rust_test_attr, "rust_test_attr"},
    {MarkerKind::unittest_method, "unittest_method"},
    {MarkerKind::zig_test_block, "zig_test_block"},
    {MarkerKind::gtest_macro, "gtest_macro"},
    {MarkerKind::vitest_call, "vitest_call"},
    {MarkerKind::go_test_func, "go_test_func"},
};

const std::map<ConditionKind, std::string> kConditionNames = {
    {ConditionKind::baseline, "baseline"},
    {ConditionKind::doc_guided, "doc_guided"},
    {ConditionKind::struct_guided, "struct_guided"},
    {ConditionKind::test_guided, "test_guided"},
    {ConditionKind::combined, "combined"},
    {ConditionKind::c1_inline, "c1_inline"},
    {ConditionKind::c2_samefile, "c2_samefile"},
    {ConditionKind::c3_sidecar, "c3_sidecar"},
};

template <typename E>
E enum_from_name(const std::map<E, std::string>& names, const std::string& name,
                 const char* what) {
  for (const auto& [value, n] : names) {
    if (n == name) return value;
  }
  raise(ErrorKind::format, std::string("unknown ") + what + ": " + name);
}

// Which marker kinds a corpus of a given language may carry.
bool compatible(Language language, MarkerKind kind) {
  switch (language) {
    case Language::python:
      return kind == MarkerKind::doctest_chevron ||
             kind == MarkerKind::unittest_method;
    case Language::rust:
      return kind == MarkerKind::rust_test_attr;
    case Language::go:
      return kind == MarkerKind::go_test_func;
    case Language::cpp:
      return kind == MarkerKind::gtest_macro;
    case Language::typescript:
      return kind == MarkerKind::vitest_call;
    case Language::zig:
      return kind == MarkerKind::zig_test_block;
  }
  return false;
}

// go test functions are only recognized at column 0; everything else may be
// indented.
bool indent_allowed(MarkerKind kind) {
  return kind != MarkerKind::go_test_func;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string default_impl_filename(Language language) {
  switch (language) {
    case Language::python: return "heap.py";
    case Language::rust: return "lib.rs";
    case Language::go: return "heap.go";
    case Language::cpp: return "heap.cpp";
    case Language::typescript: return "heap.ts";
    case Language::zig: return "d_heap.zig";
  }
  return "impl.txt";
}

std::string default_test_filename(Language language) {
  switch (language) {
    case Language::python: return "test_heap.py";
    case Language::rust: return "tests.rs";
    case Language::go: return "heap_test.go";
    case Language::cpp: return "heap_test.cpp";
    case Language::typescript: return "heap.test.ts";
    case Language::zig: return "d_heap_test.zig";
  }
  return "tests.txt";
}

void append_fenced(std::string& out, const std::string& tag,
                   const std::string& body) {
  out += "```" + tag + "\n";
  out += body;
  if (!body.empty() && body.back() != '\n') out += '\n';
  out += "```\n";
}

}  // namespace

Language language_from_string(const std::string& name) {
  return enum_from_name(kLanguageNames, name, "language");
}
std::string to_string(Language language) { return kLanguageNames.at(language); }

MarkerKind marker_kind_from_string(const std::string& name) {
  return enum_from_name(kMarkerNames, name, "marker kind");
}
std::string to_string(MarkerKind kind) { return kMarkerNames.at(kind); }

ConditionKind condition_from_string(const std::string& name) {
  return enum_from_name(kConditionNames, name, "condition");
}
std::string to_string(ConditionKind kind) { return kConditionNames.at(kind); }

std::string fence_tag(Language language) {
  switch (language) {
    case Language::cpp: return "cpp";
    case Language::typescript: return "typescript";
    default: return to_string(language);
  }
}

std::string file_extension(Language language) {
  switch (language) {
    case Language::python: return "py";
    case Language::rust: return "rs";
    case Language::go: return "go";
    case Language::cpp: return "cpp";
    case Language::typescript: return "ts";
    case Language::zig: return "zig";
  }
  return "txt";
}

std::vector<std::string> marker_literals(MarkerKind kind) {
  switch (kind) {
    case MarkerKind::doctest_chevron: return {">>>"};
    case MarkerKind::unittest_method: return {"def test_"};
    case MarkerKind::rust_test_attr: return {"#[test]"};
    case MarkerKind::zig_test_block: return {"test \""};
    case MarkerKind::gtest_macro: return {"TEST(", "TEST_F(", "TEST_P("};
    case MarkerKind::vitest_call: return {"test(", "it("};
    case MarkerKind::go_test_func: return {"func Test"};
  }
  return {};
}

MarkerSpec marker_spec_for(Language language, MarkerKind kind) {
  if (!compatible(language, kind)) {
    raise(ErrorKind::capability,
          "unsupported language/marker pair: " + to_string(language) + "/" +
              to_string(kind));
  }
  MarkerSpec spec;
  spec.language = language;
  spec.kind = kind;
  spec.denominator_source = DenominatorSource::manifest_field;
  switch (kind) {
    case MarkerKind::doctest_chevron: spec.line_pattern = R"(^\s*>>>)"; break;
    case MarkerKind::unittest_method: spec.line_pattern = R"(^\s*def test_)"; break;
    case MarkerKind::rust_test_attr: spec.line_pattern = R"(^\s*#\[test\])"; break;
    case MarkerKind::zig_test_block: spec.line_pattern = R"(^\s*test\s*")"; break;
    case MarkerKind::gtest_macro: spec.line_pattern = R"(^\s*TEST(_F|_P)?\s*\()"; break;
    case MarkerKind::vitest_call: spec.line_pattern = R"(^\s*(test|it)\s*\()"; break;
    case MarkerKind::go_test_func: spec.line_pattern = R"(^func\s+Test\w*\s*\()"; break;
  }
  return spec;
}

bool condition_requires_corpus(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::test_guided:
    case ConditionKind::combined:
    case ConditionKind::c1_inline:
    case ConditionKind::c2_samefile:
    case ConditionKind::c3_sidecar:
      return true;
    default:
      return false;
  }
}

TestCorpus load_corpus(const std::filesystem::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    raise(ErrorKind::format,
          "malformed corpus manifest " + manifest_path.string() + ": " + e.what());
  }

  TestCorpus corpus;
  try {
    corpus.target_language =
        language_from_string(manifest.at("target_language").get<std::string>());
    corpus.denominator = manifest.at("denominator").get<std::size_t>();
    std::size_t index = 0;
    for (const auto& entry : manifest.at("cases")) {
      TestCase tc;
      tc.identifier = entry.at("identifier").get<std::string>();
      tc.marker_kind =
          marker_kind_from_string(entry.at("marker_kind").get<std::string>());
      tc.byte_start = entry.at("byte_start").get<std::size_t>();
      tc.byte_end = entry.at("byte_end").get<std::size_t>();
      tc.logical_index = entry.value("logical_index", index);
      ++index;
      corpus.cases.push_back(std::move(tc));
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::format, "corpus manifest missing or mistyped field: " +
                                 std::string(e.what()));
  }

  std::filesystem::path text_path = manifest_path;
  text_path.replace_extension(".txt");
  corpus.full_text = read_file(text_path);

  if (corpus.denominator == 0) {
    raise(ErrorKind::validation, "denominator must be positive");
  }
  if (corpus.denominator != corpus.cases.size()) {
    raise(ErrorKind::validation,
          "denominator " + std::to_string(corpus.denominator) +
              " does not match case count " +
              std::to_string(corpus.cases.size()));
  }

  for (std::size_t i = 0; i < corpus.cases.size(); ++i) {
    const TestCase& tc = corpus.cases[i];
    const std::string where = " at logical_index " + std::to_string(i);
    if (tc.logical_index != i) {
      raise(ErrorKind::validation, "logical_index values must be contiguous" + where);
    }
    if (!compatible(corpus.target_language, tc.marker_kind)) {
      raise(ErrorKind::validation,
            "marker kind " + to_string(tc.marker_kind) +
                " incompatible with language " +
                to_string(corpus.target_language) + where);
    }
    if (tc.byte_start >= tc.byte_end || tc.byte_end > corpus.full_text.size()) {
      raise(ErrorKind::validation, "byte offsets out of range" + where);
    }
    std::string_view at(corpus.full_text.data() + tc.byte_start,
                        tc.byte_end - tc.byte_start);
    bool starts_with_marker = false;
    for (const auto& literal : marker_literals(tc.marker_kind)) {
      if (at.substr(0, literal.size()) == literal) {
        starts_with_marker = true;
        break;
      }
    }
    if (!starts_with_marker) {
      raise(ErrorKind::validation,
            "text at byte_start does not begin with the marker literal" + where);
    }
    // The marker must also sit at the start of its line (indentation only).
    std::size_t line_start = corpus.full_text.rfind('\n', tc.byte_start);
    line_start = (line_start == std::string::npos) ? 0 : line_start + 1;
    for (std::size_t pos = line_start; pos < tc.byte_start; ++pos) {
      char c = corpus.full_text[pos];
      if ((c != ' ' && c != '\t') || !indent_allowed(tc.marker_kind)) {
        raise(ErrorKind::validation,
              "marker is not at the start of its line" + where);
      }
    }
  }
  return corpus;
}

std::string render_prompt(const PromptTemplate& tmpl) {
  const ConditionKind kind = tmpl.condition.kind;
  if (condition_requires_corpus(kind) && !tmpl.corpus_slot.has_value()) {
    raise(ErrorKind::configuration,
          "condition " + to_string(kind) + " requires a test corpus");
  }

  if (kind == ConditionKind::baseline) return tmpl.task_description;

  std::string out = tmpl.task_description;
  if (!out.empty() && out.back() != '\n') out += '\n';

  const TestCorpus* corpus =
      tmpl.corpus_slot.has_value() ? &*tmpl.corpus_slot : nullptr;
  const std::string tag = corpus ? fence_tag(corpus->target_language) : "";

  switch (kind) {
    case ConditionKind::doc_guided:
      out += "\n## API documentation\n\n" + tmpl.condition.notes + "\n";
      break;
    case ConditionKind::struct_guided:
      out += "\n## Type signatures and stubs\n\n" + tmpl.condition.notes + "\n";
      break;
    case ConditionKind::combined:
      out += "\n## Guidance\n\n" + tmpl.condition.notes + "\n";
      [[fallthrough]];
    case ConditionKind::test_guided:
      out += "\n## Tests\n\nKeep every test below in your output file, exactly "
             "as written, and make them pass.\n\n";
      append_fenced(out, tag, corpus->full_text);
      break;
    case ConditionKind::c1_inline:
      out += "\nComplete the file below. Implement every method and keep the "
             "docstring examples exactly as written.\n\n";
      append_fenced(out, tag, corpus->full_text);
      break;
    case ConditionKind::c2_samefile:
      out += "\nComplete the file below. Implement every method and keep the "
             "test class at the bottom of the file exactly as written.\n\n";
      append_fenced(out, tag, corpus->full_text);
      break;
    case ConditionKind::c3_sidecar: {
      const std::string impl_name = default_impl_filename(corpus->target_language);
      const std::string test_name = default_test_filename(corpus->target_language);
      out += "\nProduce two files. Implement the module in `" + impl_name +
             "` and keep `" + test_name + "` exactly as written.\n\n";
      out += "## File: " + impl_name + "\n\n";
      if (tmpl.implementation_stub.empty()) {
        append_fenced(out, tag, "# " + impl_name + " - implement the module described above\n");
      } else {
        append_fenced(out, tag, tmpl.implementation_stub);
      }
      out += "\n## File: " + test_name + "\n\n";
      append_fenced(out, tag, corpus->full_text);
      break;
    }
    case ConditionKind::baseline:
      break;  // handled above
  }
  return out;
}

}  // namespace sega::corpus
