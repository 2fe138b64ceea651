#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sega/corpus.hpp"

namespace sega::extraction {

struct CodeBlock {
  std::optional<std::string> fence_language_tag;
  std::string body;        // excludes the fence lines
  std::size_t ordinal = 0;  // 0-based position in response order
  bool unterminated = false;
};

struct MarkerScan {
  corpus::MarkerSpec spec;
  std::size_t count = 0;
  std::vector<std::size_t> line_numbers;  // 1-based
};

enum class MeasurementTarget { extracted_code, full_response };

struct PreservationResult {
  std::size_t preserved = 0;    // clamped to denominator
  std::size_t raw_count = 0;    // unclamped marker count
  std::size_t denominator = 0;
  double percentage = 0.0;
  MeasurementTarget measurement_target = MeasurementTarget::extracted_code;
  std::string notes;
};

// All fenced code blocks in response order. Tagged and untagged fences are
// both accepted; an unterminated fence yields a block running to end-of-text.
std::vector<CodeBlock> extract_code_blocks(std::string_view response);

MarkerScan scan_markers(std::string_view text, const corpus::MarkerSpec& spec);

// The file a condition's preservation is measured against. Sidecar layouts
// are scanned on the raw response because the tests live outside the first
// code block; everything else is scanned on the extracted code file.
MeasurementTarget measurement_target_for(corpus::ConditionKind kind);

std::string run_file_prefix(std::size_t run_index);  // "01", "02", ...

// Writes `<NN>_code.<ext>` from the first fenced block of `<NN>_response.md`
// and returns its path. A response without fences produces an empty file.
std::filesystem::path write_code_file(const std::filesystem::path& run_dir,
                                      std::size_t run_index,
                                      corpus::Language language);

// Scans the measurement target for run `run_index` under `run_dir`, writes
// `<NN>_preservation.json`, and returns the result.
PreservationResult measure_preservation(const std::filesystem::path& run_dir,
                                        std::size_t run_index,
                                        const corpus::Condition& condition,
                                        const corpus::TestCorpus& corpus);

}  // namespace sega::extraction
