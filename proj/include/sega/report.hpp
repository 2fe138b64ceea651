#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sega/metrics.hpp"

namespace sega::report {

struct ExperimentReport {
  std::string label;
  metrics::SegaTriple triple;
  metrics::QualityPoint point;
  std::string model_id;
  std::string condition;
  std::string corpus_hash;
  nlohmann::json per_run = nlohmann::json::array();
};

enum class Format { csv, json, svg };

Format format_from_string(const std::string& name);

// Writes `report.json` (always), `report.csv`, and `quality_regions.svg`
// under `out_dir`. An empty format set means JSON only; any non-empty set
// implies CSV + JSON, plus SVG when requested. Output is byte-stable for a
// given input: fixed ordering, fixed float formatting, no timestamps.
std::vector<std::filesystem::path> emit_report(
    const std::vector<ExperimentReport>& experiments,
    const std::set<Format>& formats, const std::filesystem::path& out_dir);

}  // namespace sega::report
