#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sega/extraction.hpp"

namespace sega::metrics {

struct DeterminismResult {
  std::size_t n_runs = 0;
  std::size_t distinct_outputs = 0;
  std::size_t modal_multiplicity = 0;
  // Modal-output share: 100 * modal_multiplicity / n_runs.
  double determinism_pct = 0.0;
  // Published-convention value: identical to determinism_pct except that an
  // all-unique batch (distinct == n) is reported as 0% rather than 100/n.
  double convention_pct = 0.0;
  std::string note;
};

struct SegaTriple {
  double determinism_pct = 0.0;
  double preservation_pct = 0.0;
  // Absent when no run had tests to execute (reported as N/A, never as 0).
  std::optional<double> correctness_pct;
  std::string correctness_note;
};

enum class Quadrant { pp, pm, mp, mm };

struct QualityPoint {
  std::optional<double> det_v;
  double pres_v = 0.0;
  double corr_v = 0.0;
  Quadrant quadrant = Quadrant::pp;
  // Sign triple (determinism, preservation, correctness) when det_v present.
  std::optional<std::array<char, 3>> octant;
};

// Per-run correctness as parsed from a native runner.
struct RunCorrectness {
  bool compiled = false;
  bool file_pass = false;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t ignored = 0;
  bool no_tests = false;
};

struct MeasuredRun {
  std::size_t run_index = 0;
  extraction::PreservationResult preservation;
  std::optional<RunCorrectness> correctness;
};

struct BatchMetrics {
  SegaTriple triple;
  DeterminismResult determinism;
  QualityPoint point;
  double file_pass_rate_pct = 0.0;
  bool any_correctness = false;
  std::vector<MeasuredRun> runs;
};

DeterminismResult determinism(const std::vector<std::string>& code_files);

// Affine map [0,100] -> [-1,+1]: 0 -> -1, 50 -> 0, 100 -> +1.
double normalize(double percentage);

// Quadrant from the (preservation, correctness) signs; octant when a
// determinism coordinate is supplied. Exact zeros classify as '+'.
QualityPoint classify(std::optional<double> det_v, double pres_v, double corr_v);

std::string to_string(Quadrant quadrant);

BatchMetrics aggregate(const std::vector<MeasuredRun>& runs,
                       const std::vector<std::string>& code_files);

// Stable JSON document for `metrics.json` (sorted keys, no timestamps).
nlohmann::json to_json(const BatchMetrics& metrics,
                       const std::string& experiment_label);

}  // namespace sega::metrics
