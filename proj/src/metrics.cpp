#include "sega/metrics.hpp"

#include <algorithm>
#include <map>

#include "sega/error.hpp"
#include "sega/hash.hpp"

namespace sega::metrics {

using nlohmann::json;

DeterminismResult determinism(const std::vector<std::string>& code_files) {
  if (code_files.empty()) {
    raise(ErrorKind::precondition, "determinism requires at least one output");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& content : code_files) ++counts[md5_hex(content)];

  DeterminismResult result;
  result.n_runs = code_files.size();
  result.distinct_outputs = counts.size();
  for (const auto& [digest, count] : counts) {
    result.modal_multiplicity = std::max(result.modal_multiplicity, count);
  }
  result.determinism_pct = 100.0 * static_cast<double>(result.modal_multiplicity) /
                           static_cast<double>(result.n_runs);
  if (result.distinct_outputs == result.n_runs && result.n_runs > 1) {
    result.convention_pct = 0.0;
    result.note = "all outputs unique: modal share " +
                  std::to_string(result.determinism_pct) +
                  "% reported as 0% under the all-unique convention";
  } else {
    result.convention_pct = result.determinism_pct;
  }
  return result;
}

double normalize(double percentage) {
  if (percentage < 0.0 || percentage > 100.0) {
    raise(ErrorKind::domain,
          "percentage out of range [0,100]: " + std::to_string(percentage));
  }
  return (percentage - 50.0) / 50.0;
}

namespace {
char sign_of(double v) { return v >= 0.0 ? '+' : '-'; }
}  // namespace

QualityPoint classify(std::optional<double> det_v, double pres_v,
                      double corr_v) {
  for (double v : {pres_v, corr_v}) {
    if (v < -1.0 || v > 1.0) {
      raise(ErrorKind::domain, "normalized value out of range [-1,+1]");
    }
  }
  if (det_v && (*det_v < -1.0 || *det_v > 1.0)) {
    raise(ErrorKind::domain, "normalized value out of range [-1,+1]");
  }

  QualityPoint point;
  point.det_v = det_v;
  point.pres_v = pres_v;
  point.corr_v = corr_v;
  const bool p = pres_v >= 0.0;
  const bool c = corr_v >= 0.0;
  point.quadrant = p ? (c ? Quadrant::pp : Quadrant::pm)
                     : (c ? Quadrant::mp : Quadrant::mm);
  if (det_v) {
    point.octant = {sign_of(*det_v), sign_of(pres_v), sign_of(corr_v)};
  }
  return point;
}

std::string to_string(Quadrant quadrant) {
  switch (quadrant) {
    case Quadrant::pp: return "(+,+)";
    case Quadrant::pm: return "(+,-)";
    case Quadrant::mp: return "(-,+)";
    case Quadrant::mm: return "(-,-)";
  }
  return "?";
}

BatchMetrics aggregate(const std::vector<MeasuredRun>& runs,
                       const std::vector<std::string>& code_files) {
  if (runs.empty()) {
    raise(ErrorKind::precondition, "aggregate requires at least one run");
  }
  const std::size_t denominator = runs.front().preservation.denominator;
  for (const auto& run : runs) {
    if (run.preservation.denominator != denominator) {
      raise(ErrorKind::aggregation,
            "mixed preservation denominators across runs: " +
                std::to_string(denominator) + " vs " +
                std::to_string(run.preservation.denominator));
    }
  }

  BatchMetrics metrics;
  metrics.runs = runs;
  metrics.determinism = determinism(code_files);

  double pres_sum = 0.0;
  double corr_sum = 0.0;
  std::size_t corr_n = 0;
  std::size_t file_pass = 0;
  std::size_t with_outcome = 0;
  for (const auto& run : runs) {
    pres_sum += run.preservation.percentage;
    if (!run.correctness) continue;
    ++with_outcome;
    const RunCorrectness& rc = *run.correctness;
    if (rc.file_pass) ++file_pass;
    if (!rc.compiled) {
      // A run that does not compile scores 0% on the correctness dimension.
      corr_sum += 0.0;
      ++corr_n;
    } else if (rc.passed + rc.failed > 0) {
      corr_sum += 100.0 * static_cast<double>(rc.passed) /
                  static_cast<double>(rc.passed + rc.failed);
      ++corr_n;
    }
    // Compiling runs with zero executed tests are N/A and excluded.
  }

  metrics.triple.determinism_pct = metrics.determinism.determinism_pct;
  metrics.triple.preservation_pct = pres_sum / static_cast<double>(runs.size());
  metrics.any_correctness = with_outcome > 0;
  if (corr_n > 0) {
    metrics.triple.correctness_pct = corr_sum / static_cast<double>(corr_n);
  } else if (with_outcome > 0) {
    metrics.triple.correctness_note =
        "N/A: no run produced executable tests (zero tests in output)";
  } else {
    metrics.triple.correctness_note = "not measured (no runner requested)";
  }
  if (with_outcome > 0) {
    metrics.file_pass_rate_pct = 100.0 * static_cast<double>(file_pass) /
                                 static_cast<double>(with_outcome);
  }

  const double corr_for_point = metrics.triple.correctness_pct.value_or(0.0);
  metrics.point = classify(normalize(metrics.triple.determinism_pct),
                           normalize(metrics.triple.preservation_pct),
                           normalize(std::clamp(corr_for_point, 0.0, 100.0)));
  return metrics;
}

json to_json(const BatchMetrics& metrics, const std::string& experiment_label) {
  json per_run = json::array();
  for (const auto& run : metrics.runs) {
    json r{
        {"run", run.run_index},
        {"preserved", run.preservation.preserved},
        {"raw_count", run.preservation.raw_count},
        {"denominator", run.preservation.denominator},
        {"preservation_pct", run.preservation.percentage},
        {"measurement_target",
         run.preservation.measurement_target ==
                 extraction::MeasurementTarget::full_response
             ? "full_response"
             : "extracted_code"},
    };
    if (run.correctness) {
      const RunCorrectness& rc = *run.correctness;
      r["correctness"] = {
          {"compiled", rc.compiled},   {"file_pass", rc.file_pass},
          {"passed", rc.passed},       {"failed", rc.failed},
          {"ignored", rc.ignored},     {"no_tests", rc.no_tests},
      };
    }
    per_run.push_back(std::move(r));
  }

  // Quality-region coordinates are only meaningful with a measured
  // correctness; otherwise the point fields degrade to null.
  const bool has_corr = metrics.triple.correctness_pct.has_value();
  json octant;
  if (has_corr && metrics.point.octant) {
    octant = std::string(1, (*metrics.point.octant)[0]) + "," +
             std::string(1, (*metrics.point.octant)[1]) + "," +
             std::string(1, (*metrics.point.octant)[2]);
  }

  json j{
      {"experiment_label", experiment_label},
      {"triple",
       {
           {"determinism_pct", metrics.triple.determinism_pct},
           {"preservation_pct", metrics.triple.preservation_pct},
           {"correctness_pct", metrics.triple.correctness_pct.has_value()
                                   ? json(*metrics.triple.correctness_pct)
                                   : json(nullptr)},
           {"correctness_note", metrics.triple.correctness_note},
       }},
      {"determinism",
       {
           {"n_runs", metrics.determinism.n_runs},
           {"distinct_outputs", metrics.determinism.distinct_outputs},
           {"modal_multiplicity", metrics.determinism.modal_multiplicity},
           {"modal_share_pct", metrics.determinism.determinism_pct},
           {"convention_pct", metrics.determinism.convention_pct},
           {"note", metrics.determinism.note},
       }},
      {"normalized",
       {
           {"det_v", metrics.point.det_v.has_value() ? json(*metrics.point.det_v)
                                                     : json(nullptr)},
           {"pres_v", metrics.point.pres_v},
           {"corr_v", has_corr ? json(metrics.point.corr_v) : json(nullptr)},
       }},
      {"quadrant", has_corr ? json(to_string(metrics.point.quadrant)) : json(nullptr)},
      {"octant", octant},
      {"file_pass_rate_pct", metrics.file_pass_rate_pct},
      {"per_run", per_run},
  };
  return j;
}

}  // namespace sega::metrics
