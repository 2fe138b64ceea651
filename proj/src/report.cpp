#include "sega/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "sega/error.hpp"

namespace sega::report {

namespace {

using nlohmann::json;

std::string fixed(double value, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << data;
}

// Map a normalized coordinate in [-1,+1] to SVG pixel space.
double px_x(double v) { return 320.0 + v * 250.0; }
double px_y(double v) { return 320.0 - v * 250.0; }

std::string svg_scatter(const std::vector<ExperimentReport>& experiments) {
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n";
  svg += "  <rect x=\"70\" y=\"70\" width=\"500\" height=\"500\" fill=\"none\" "
         "stroke=\"#444\"/>\n";
  // Quadrant gridlines at normalized zero.
  svg += "  <line x1=\"320\" y1=\"70\" x2=\"320\" y2=\"570\" stroke=\"#bbb\" "
         "stroke-dasharray=\"4 3\"/>\n";
  svg += "  <line x1=\"70\" y1=\"320\" x2=\"570\" y2=\"320\" stroke=\"#bbb\" "
         "stroke-dasharray=\"4 3\"/>\n";
  svg += "  <text x=\"320\" y=\"600\" text-anchor=\"middle\" font-size=\"14\">"
         "preservation (v)</text>\n";
  svg += "  <text x=\"30\" y=\"320\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 30 320)\">correctness (v)</text>\n";
  svg += "  <text x=\"560\" y=\"85\" text-anchor=\"end\" font-size=\"11\" "
         "fill=\"#888\">ideal</text>\n";
  svg += "  <text x=\"560\" y=\"562\" text-anchor=\"end\" font-size=\"11\" "
         "fill=\"#888\">dangerous</text>\n";
  svg += "  <text x=\"80\" y=\"85\" font-size=\"11\" fill=\"#888\">safe but "
         "opaque</text>\n";
  svg += "  <text x=\"80\" y=\"562\" font-size=\"11\" fill=\"#888\">failing</text>\n";
  for (const auto& e : experiments) {
    if (!e.triple.correctness_pct) continue;  // no point without a measured corr
    // Marker size carries the determinism channel when present.
    double radius = 5.0;
    if (e.point.det_v) radius = 4.0 + 3.0 * (*e.point.det_v + 1.0);
    svg += "  <circle cx=\"" + fixed(px_x(e.point.pres_v), 2) + "\" cy=\"" +
           fixed(px_y(e.point.corr_v), 2) + "\" r=\"" + fixed(radius, 2) +
           "\" fill=\"#2268b2\" fill-opacity=\"0.6\" stroke=\"#123\"/>\n";
    svg += "  <text x=\"" + fixed(px_x(e.point.pres_v) + 8.0, 2) + "\" y=\"" +
           fixed(px_y(e.point.corr_v) - 8.0, 2) + "\" font-size=\"11\">" +
           e.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

Format format_from_string(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  if (name == "svg") return Format::svg;
  raise(ErrorKind::format, "unknown report format: " + name);
}

std::vector<std::filesystem::path> emit_report(
    const std::vector<ExperimentReport>& experiments,
    const std::set<Format>& formats, const std::filesystem::path& out_dir) {
  if (experiments.empty()) {
    raise(ErrorKind::precondition, "emit_report requires at least one experiment");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::io, "cannot create " + out_dir.string());

  std::vector<ExperimentReport> ordered = experiments;
  std::sort(ordered.begin(), ordered.end(),
            [](const ExperimentReport& a, const ExperimentReport& b) {
              return a.label < b.label;
            });

  std::set<Format> selected = formats;
  if (selected.empty()) {
    selected = {Format::json};
  } else {
    selected.insert(Format::json);
    selected.insert(Format::csv);
  }

  std::vector<std::filesystem::path> written;

  if (selected.count(Format::json)) {
    json out = json::array();
    for (const auto& e : ordered) {
      json octant;
      if (e.point.octant) {
        octant = std::string(1, (*e.point.octant)[0]) + "," +
                 std::string(1, (*e.point.octant)[1]) + "," +
                 std::string(1, (*e.point.octant)[2]);
      }
      out.push_back({
          {"label", e.label},
          {"model_id", e.model_id},
          {"condition", e.condition},
          {"corpus_hash", e.corpus_hash},
          {"triple",
           {{"determinism_pct", e.triple.determinism_pct},
            {"preservation_pct", e.triple.preservation_pct},
            {"correctness_pct", e.triple.correctness_pct.has_value()
                                    ? json(*e.triple.correctness_pct)
                                    : json(nullptr)},
            {"correctness_note", e.triple.correctness_note}}},
          {"normalized",
           {{"det_v", e.point.det_v.has_value() ? json(*e.point.det_v)
                                                : json(nullptr)},
            {"pres_v", e.point.pres_v},
            {"corr_v", e.point.corr_v}}},
          {"quadrant", metrics::to_string(e.point.quadrant)},
          {"octant", octant},
          {"per_run", e.per_run},
      });
    }
    const auto path = out_dir / "report.json";
    write_file(path, out.dump(2) + "\n");
    written.push_back(path);
  }

  if (selected.count(Format::csv)) {
    std::string csv =
        "label,model_id,condition,determinism_pct,preservation_pct,"
        "correctness_pct,det_v,pres_v,corr_v,quadrant\n";
    for (const auto& e : ordered) {
      csv += e.label + "," + e.model_id + "," + e.condition + ",";
      csv += fixed(e.triple.determinism_pct) + "," +
             fixed(e.triple.preservation_pct) + ",";
      csv += e.triple.correctness_pct ? fixed(*e.triple.correctness_pct) : "NA";
      csv += ",";
      csv += e.point.det_v ? fixed(*e.point.det_v) : "NA";
      csv += "," + fixed(e.point.pres_v) + "," + fixed(e.point.corr_v) + ",\"" +
             metrics::to_string(e.point.quadrant) + "\"\n";
    }
    const auto path = out_dir / "report.csv";
    write_file(path, csv);
    written.push_back(path);
  }

  if (selected.count(Format::svg)) {
    const auto path = out_dir / "quality_regions.svg";
    write_file(path, svg_scatter(ordered));
    written.push_back(path);
  }
  return written;
}

}  // namespace sega::report
