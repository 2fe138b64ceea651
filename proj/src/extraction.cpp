#include "sega/extraction.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "sega/error.hpp"

namespace sega::extraction {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path,
                      const std::string& run_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::io,
          "missing artifact for run " + run_label + ": " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

// Fence opener: three or more backticks, optionally followed by a tag.
bool parse_fence(std::string_view line, std::string* tag) {
  std::size_t ticks = 0;
  while (ticks < line.size() && line[ticks] == '`') ++ticks;
  if (ticks < 3) return false;
  if (tag) {
    std::string t(line.substr(ticks));
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ' || t.back() == '\t'))
      t.pop_back();
    *tag = t;
  }
  return true;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::vector<CodeBlock> extract_code_blocks(std::string_view response) {
  std::vector<CodeBlock> blocks;
  bool in_block = false;
  CodeBlock current;
  for (std::string_view line : split_lines(response)) {
    std::string tag;
    if (parse_fence(line, &tag)) {
      if (!in_block) {
        current = CodeBlock{};
        current.ordinal = blocks.size();
        if (!tag.empty()) current.fence_language_tag = tag;
        in_block = true;
      } else {
        in_block = false;
        blocks.push_back(std::move(current));
      }
      continue;
    }
    if (in_block) {
      current.body.append(line);
      current.body += '\n';
    }
  }
  if (in_block) {
    current.unterminated = true;
    blocks.push_back(std::move(current));
  }
  return blocks;
}

MarkerScan scan_markers(std::string_view text, const corpus::MarkerSpec& spec) {
  MarkerScan scan;
  scan.spec = spec;
  const std::regex pattern(spec.line_pattern);
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (std::regex_search(line.begin(), line.end(), pattern)) {
      scan.line_numbers.push_back(line_no);
    }
  }
  scan.count = scan.line_numbers.size();
  return scan;
}

MeasurementTarget measurement_target_for(corpus::ConditionKind kind) {
  return kind == corpus::ConditionKind::c3_sidecar
             ? MeasurementTarget::full_response
             : MeasurementTarget::extracted_code;
}

std::string run_file_prefix(std::size_t run_index) {
  std::string s = std::to_string(run_index);
  return s.size() < 2 ? "0" + s : s;
}

std::filesystem::path write_code_file(const std::filesystem::path& run_dir,
                                      std::size_t run_index,
                                      corpus::Language language) {
  const std::string prefix = run_file_prefix(run_index);
  const std::string response =
      read_file(run_dir / (prefix + "_response.md"), prefix);
  const auto blocks = extract_code_blocks(response);
  const std::filesystem::path code_path =
      run_dir / (prefix + "_code." + corpus::file_extension(language));
  write_file(code_path, blocks.empty() ? std::string_view{} : blocks[0].body);
  return code_path;
}

PreservationResult measure_preservation(const std::filesystem::path& run_dir,
                                        std::size_t run_index,
                                        const corpus::Condition& condition,
                                        const corpus::TestCorpus& corpus) {
  const std::string prefix = run_file_prefix(run_index);
  PreservationResult result;
  result.measurement_target = measurement_target_for(condition.kind);
  result.denominator = corpus.denominator;
  if (corpus.cases.empty()) {
    raise(ErrorKind::precondition, "corpus has no cases");
  }

  std::string text;
  if (result.measurement_target == MeasurementTarget::full_response) {
    text = read_file(run_dir / (prefix + "_response.md"), prefix);
  } else {
    const std::filesystem::path code_path =
        run_dir /
        (prefix + "_code." + corpus::file_extension(corpus.target_language));
    if (!std::filesystem::exists(code_path)) {
      write_code_file(run_dir, run_index, corpus.target_language);
    }
    text = read_file(code_path, prefix);
  }

  const corpus::MarkerSpec spec = corpus::marker_spec_for(
      corpus.target_language, corpus.cases.front().marker_kind);
  const MarkerScan scan = scan_markers(text, spec);
  result.raw_count = scan.count;
  result.preserved = std::min(scan.count, corpus.denominator);
  if (scan.count > corpus.denominator) {
    result.notes = "raw marker count " + std::to_string(scan.count) +
                   " exceeds denominator; clamped";
  }
  result.percentage =
      100.0 * static_cast<double>(result.preserved) /
      static_cast<double>(result.denominator);

  json j{
      {"run", run_index},
      {"preserved", result.preserved},
      {"raw_count", result.raw_count},
      {"denominator", result.denominator},
      {"percentage", result.percentage},
      {"measurement_target",
       result.measurement_target == MeasurementTarget::full_response
           ? "full_response"
           : "extracted_code"},
      {"notes", result.notes},
  };
  write_file(run_dir / (prefix + "_preservation.json"), j.dump(2) + "\n");
  return result;
}

}  // namespace sega::extraction
