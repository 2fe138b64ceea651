// sega: experiment runner and measurement toolkit for the test co-location
// evaluation pipeline. Subcommands: run, measure, stats, mechanism, report.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sega/corpus.hpp"
#include "sega/error.hpp"
#include "sega/extraction.hpp"
#include "sega/hash.hpp"
#include "sega/mechanism.hpp"
#include "sega/metrics.hpp"
#include "sega/providers.hpp"
#include "sega/report.hpp"
#include "sega/runners.hpp"
#include "sega/stats.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitIncomplete = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) sega::raise(sega::ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) sega::raise(sega::ErrorKind::io, "cannot write " + path.string());
  out << data;
}

// Sample files: JSON array, or one value per line ('#' comments allowed).
std::vector<double> load_sample(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (const auto& v : json::parse(text)) values.push_back(v.get<double>());
    return values;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    values.push_back(std::stod(line.substr(start)));
  }
  return values;
}

std::vector<std::size_t> discover_runs(const std::filesystem::path& dir) {
  std::vector<std::size_t> runs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::size_t pos = name.find("_response.md");
    if (pos == std::string::npos || pos == 0) continue;
    runs.push_back(std::stoul(name.substr(0, pos)));
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

struct MeasureOutcome {
  sega::metrics::BatchMetrics metrics;
  json metrics_json;
};

// Offline measurement pass over a batch directory: rewrite code files,
// re-scan preservation, optionally execute the native runner, aggregate,
// and persist metrics.json. Deterministic for unchanged artifacts.
MeasureOutcome measure_directory(const std::filesystem::path& dir,
                                 const sega::corpus::TestCorpus& corpus,
                                 const sega::corpus::Condition& condition,
                                 const std::optional<sega::runners::RunnerKind>& runner,
                                 const std::string& label, int timeout_s) {
  const auto runs = discover_runs(dir);
  if (runs.empty()) {
    sega::raise(sega::ErrorKind::io,
                "no <NN>_response.md artifacts under " + dir.string());
  }
  if (runner && !sega::runners::toolchain_available(*runner)) {
    sega::raise(sega::ErrorKind::environment,
                "requested runner toolchain is unavailable: " +
                    sega::runners::to_string(*runner));
  }

  std::vector<sega::metrics::MeasuredRun> measured;
  std::vector<std::string> code_files;
  for (std::size_t run : runs) {
    const auto code_path =
        sega::extraction::write_code_file(dir, run, corpus.target_language);
    code_files.push_back(read_file(code_path));

    sega::metrics::MeasuredRun mr;
    mr.run_index = run;
    mr.preservation =
        sega::extraction::measure_preservation(dir, run, condition, corpus);
    if (runner) {
      const auto outcome =
          sega::runners::run_native_tests(code_path, *runner, timeout_s);
      sega::runners::write_outcome_json(dir, run, outcome);
      sega::metrics::RunCorrectness rc;
      rc.compiled = outcome.compiled.value_or(false);
      rc.file_pass = outcome.file_pass;
      rc.passed = outcome.individual_passed;
      rc.failed = outcome.individual_failed;
      rc.ignored = outcome.individual_ignored;
      rc.no_tests = outcome.no_tests;
      mr.correctness = rc;
    }
    measured.push_back(std::move(mr));
  }

  MeasureOutcome result;
  result.metrics = sega::metrics::aggregate(measured, code_files);
  result.metrics_json = sega::metrics::to_json(result.metrics, label);

  json provenance{{"condition", sega::corpus::to_string(condition.kind)},
                  {"corpus_hash", sega::md5_hex(corpus.full_text)},
                  {"model_id", ""}};
  if (std::filesystem::exists(dir / "manifest.json")) {
    const auto manifest = sega::providers::load_manifest(dir);
    provenance["model_id"] = manifest.provider.model_id;
  }
  result.metrics_json["provenance"] = provenance;
  write_file(dir / "metrics.json", result.metrics_json.dump(2) + "\n");
  return result;
}

void print_metrics_summary(const sega::metrics::BatchMetrics& m) {
  std::cout << "preservation: " << m.triple.preservation_pct << "%\n";
  if (m.triple.correctness_pct) {
    std::cout << "correctness:  " << *m.triple.correctness_pct << "%\n";
  } else {
    std::cout << "correctness:  " << m.triple.correctness_note << "\n";
  }
  std::cout << "determinism:  " << m.determinism.determinism_pct
            << "% modal share (" << m.determinism.distinct_outputs << "/"
            << m.determinism.n_runs << " distinct)";
  if (!m.determinism.note.empty()) {
    std::cout << " [" << m.determinism.note << "]";
  }
  std::cout << "\n";
}

struct RunConfig {
  std::string provider_kind = "stub";
  std::string model_id;
  std::string base_url;
  std::string credential_env;
  std::string stub_source;
  std::string prompt_file;
  std::string experiment_label;
  std::size_t runs = 1;
  int delay_ms = 0;
  std::string output_root = ".";
  std::string language;
  std::string condition;
  std::string corpus_manifest;
  std::string runner;
  int max_output_tokens = 4096;
  double temperature = 0.0;
  int timeout_s = 120;
};

sega::providers::ProviderConfig to_provider_config(const RunConfig& rc) {
  sega::providers::ProviderConfig pc;
  pc.endpoint_kind = sega::providers::endpoint_kind_from_string(rc.provider_kind);
  pc.model_id = rc.model_id;
  pc.base_url = rc.base_url;
  pc.credential_env_var = rc.credential_env;
  pc.stub_source = rc.stub_source;
  pc.delay_ms = rc.delay_ms;
  pc.max_output_tokens = rc.max_output_tokens;
  pc.timeout_s = rc.timeout_s;
  using EK = sega::providers::EndpointKind;
  if (pc.base_url.empty()) {
    if (pc.endpoint_kind == EK::anthropic_messages) pc.base_url = "https://api.anthropic.com";
    if (pc.endpoint_kind == EK::openai_compatible) pc.base_url = "https://api.mistral.ai";
    if (pc.endpoint_kind == EK::local_openai_compatible) pc.base_url = "http://127.0.0.1:1234";
  }
  if (pc.credential_env_var.empty()) {
    if (pc.endpoint_kind == EK::anthropic_messages) pc.credential_env_var = "ANTHROPIC_API_KEY";
    if (pc.endpoint_kind == EK::openai_compatible) pc.credential_env_var = "MISTRAL_API_KEY";
  }
  return pc;
}

json dose_curve_json(const std::vector<sega::mechanism::DosePoint>& curve) {
  json arr = json::array();
  for (const auto& point : curve) {
    arr.push_back({{"scale", point.scale},
                   {"kl_nats", point.kl_nats},
                   {"kl_percent", point.kl_nats * 100.0}});
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"test co-location experiment toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  // ---- run -------------------------------------------------------------
  RunConfig rc;
  CLI::App* run = app.add_subcommand("run", "execute an n-run generation batch");
  run->add_option("--provider", rc.provider_kind,
                  "stub | anthropic | openai | local")
      ->envname("SEGA_PROVIDER");
  run->add_option("--model", rc.model_id, "model identifier")->envname("SEGA_MODEL");
  run->add_option("--base-url", rc.base_url, "endpoint base URL")
      ->envname("SEGA_BASE_URL");
  run->add_option("--credential-env", rc.credential_env,
                  "environment variable holding the API key");
  run->add_option("--stub-source", rc.stub_source,
                  "canned response file or directory for the stub provider");
  run->add_option("--prompt-file", rc.prompt_file, "prompt markdown file")
      ->required();
  run->add_option("--experiment-label", rc.experiment_label,
                  "batch directory name under the output root")
      ->required();
  run->add_option("--runs", rc.runs, "number of runs")->check(CLI::PositiveNumber);
  run->add_option("--delay", rc.delay_ms, "milliseconds between request starts")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--output-root", rc.output_root, "artifact root directory")
      ->envname("SEGA_OUTPUT_ROOT");
  run->add_option("--language", rc.language, "target language for measurement");
  run->add_option("--condition", rc.condition, "prompt condition kind");
  run->add_option("--corpus", rc.corpus_manifest, "corpus manifest (.json)");
  run->add_option("--runner", rc.runner, "doctest | unittest | cargo");
  run->add_option("--max-output-tokens", rc.max_output_tokens);
  run->add_option("--temperature", rc.temperature);
  run->add_option("--timeout-s", rc.timeout_s);

  // ---- measure ----------------------------------------------------------
  RunConfig mc;
  CLI::App* measure =
      app.add_subcommand("measure", "re-measure an existing batch directory");
  measure->add_option("--output-root", mc.output_root)->envname("SEGA_OUTPUT_ROOT");
  measure->add_option("--experiment-label", mc.experiment_label)->required();
  measure->add_option("--corpus", mc.corpus_manifest)->required();
  measure->add_option("--condition", mc.condition)->required();
  measure->add_option("--runner", mc.runner, "doctest | unittest | cargo");
  measure->add_option("--timeout-s", mc.timeout_s);

  // ---- stats -------------------------------------------------------------
  std::string stats_a, stats_b, stats_p, stats_q, stats_out;
  std::string kl_mode = "exact";
  double kl_epsilon = 1e-10;
  CLI::App* stats_cmd = app.add_subcommand("stats", "statistical tests");
  stats_cmd->require_subcommand(1);
  CLI::App* welch = stats_cmd->add_subcommand("welch", "Welch's t-test");
  welch->add_option("--a", stats_a, "sample file")->required();
  welch->add_option("--b", stats_b, "sample file")->required();
  welch->add_option("--out", stats_out, "write JSON result here");
  CLI::App* kl = stats_cmd->add_subcommand("kl", "KL divergence");
  kl->add_option("--p", stats_p, "distribution file")->required();
  kl->add_option("--q", stats_q, "distribution file")->required();
  kl->add_option("--mode", kl_mode, "exact | smoothed");
  kl->add_option("--epsilon", kl_epsilon, "smoothing epsilon");
  kl->add_option("--out", stats_out);
  CLI::App* contrast = stats_cmd->add_subcommand(
      "contrast", "mean ratio plus Welch test between two samples");
  contrast->add_option("--a", stats_a)->required();
  contrast->add_option("--b", stats_b)->required();
  contrast->add_option("--out", stats_out);

  // ---- mechanism ----------------------------------------------------------
  std::uint64_t mech_seed = 7;
  std::size_t mech_T = 16, mech_H = 2, mech_C = 8, probe_outputs = 16;
  std::string mech_out;
  std::vector<std::size_t> mech_positions;
  std::vector<double> dose_scales;
  double mech_scale = 1.0;
  std::string mech_target = "state_write";
  CLI::App* mech = app.add_subcommand(
      "mechanism", "synthetic recurrence instances, interventions, KL curves");
  mech->add_option("--seed", mech_seed);
  mech->add_option("--seq-len", mech_T)->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  mech->add_option("--heads", mech_H)->check(CLI::Range(std::size_t{1}, std::size_t{4}));
  mech->add_option("--head-dim", mech_C)->check(CLI::Range(std::size_t{1}, std::size_t{16}));
  mech->add_option("--out", mech_out, "output directory")->required();
  mech->add_option("--positions", mech_positions, "intervention positions")
      ->delimiter(',');
  mech->add_option("--scale", mech_scale, "intervention scale");
  mech->add_option("--target", mech_target, "state_write | attention_edges");
  mech->add_option("--dose-scales", dose_scales,
                   "emit a KL dose-response curve over these scales")
      ->delimiter(',');
  mech->add_option("--probe-outputs", probe_outputs);

  // ---- report ---------------------------------------------------------------
  std::vector<std::string> report_inputs;
  std::vector<std::string> report_formats;
  std::string report_out = ".";
  CLI::App* rep = app.add_subcommand("report", "tables and quality-region plots");
  rep->add_option("--metrics", report_inputs, "metrics.json files")->required();
  rep->add_option("--formats", report_formats, "csv,json,svg")->delimiter(',');
  rep->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      const auto pc = to_provider_config(rc);
      const std::string prompt = read_file(rc.prompt_file);
      const auto manifest = sega::providers::run_batch(
          pc, prompt, rc.runs, rc.delay_ms, rc.experiment_label, rc.output_root);
      std::cout << "batch " << manifest.experiment_label << ": "
                << manifest.records.size() << "/" << manifest.n_runs
                << " runs, status " << manifest.status << "\n";
      if (!rc.corpus_manifest.empty() && !rc.condition.empty()) {
        const auto corpus = sega::corpus::load_corpus(rc.corpus_manifest);
        const sega::corpus::Condition condition{
            sega::corpus::condition_from_string(rc.condition), ""};
        std::optional<sega::runners::RunnerKind> runner;
        if (!rc.runner.empty()) {
          runner = sega::runners::runner_kind_from_string(rc.runner);
        }
        const auto outcome = measure_directory(
            manifest.output_dir, corpus, condition, runner,
            rc.experiment_label, rc.timeout_s);
        print_metrics_summary(outcome.metrics);
      }
      return kExitOk;
    }

    if (*measure) {
      const auto corpus = sega::corpus::load_corpus(mc.corpus_manifest);
      const sega::corpus::Condition condition{
          sega::corpus::condition_from_string(mc.condition), ""};
      std::optional<sega::runners::RunnerKind> runner;
      if (!mc.runner.empty()) {
        runner = sega::runners::runner_kind_from_string(mc.runner);
      }
      const std::filesystem::path dir =
          std::filesystem::path(mc.output_root) / mc.experiment_label;
      const auto outcome = measure_directory(dir, corpus, condition, runner,
                                             mc.experiment_label, mc.timeout_s);
      print_metrics_summary(outcome.metrics);
      return kExitOk;
    }

    if (*stats_cmd) {
      json out;
      if (*welch) {
        const sega::stats::Sample a{load_sample(stats_a), "a"};
        const sega::stats::Sample b{load_sample(stats_b), "b"};
        const auto r = sega::stats::welch_t(a, b);
        out = {{"t", r.t_statistic}, {"dof", r.dof}, {"p_two_sided", r.p_two_sided}};
      } else if (*kl) {
        const auto p = sega::stats::make_distribution(load_sample(stats_p));
        const auto q = sega::stats::make_distribution(load_sample(stats_q));
        const auto policy = kl_mode == "smoothed"
                                ? sega::stats::KlZeroPolicy::smoothed
                                : sega::stats::KlZeroPolicy::exact;
        const auto r = sega::stats::kl_divergence(p, q, policy, kl_epsilon);
        out = {{"kl_nats", r.infinite ? json("inf") : json(r.nats)},
               {"kl_percent", r.infinite ? json("inf") : json(r.percent())},
               {"infinite", r.infinite},
               {"epsilon_used", r.epsilon_used}};
      } else {
        const sega::stats::Sample a{load_sample(stats_a), "a"};
        const sega::stats::Sample b{load_sample(stats_b), "b"};
        const auto r = sega::stats::attention_contrast(a, b);
        out = {{"ratio", r.ratio},
               {"welch",
                {{"t", r.welch.t_statistic},
                 {"dof", r.welch.dof},
                 {"p_two_sided", r.welch.p_two_sided}}}};
      }
      std::cout << out.dump(2) << "\n";
      if (!stats_out.empty()) write_file(stats_out, out.dump(2) + "\n");
      return kExitOk;
    }

    if (*mech) {
      namespace mechws = sega::mechanism;
      std::filesystem::create_directories(mech_out);
      const auto params = mechws::random_wkv(mech_seed, mech_T, mech_H, mech_C);
      write_file(std::filesystem::path(mech_out) / "instance.json",
                 json{{"seed", mech_seed},
                      {"seq_len", mech_T},
                      {"n_heads", mech_H},
                      {"head_dim", mech_C},
                      {"r", params.r},
                      {"k", params.k},
                      {"v", params.v},
                      {"w", params.w}}
                         .dump(2) +
                     "\n");

      const auto baseline = mechws::wkv_forward(params);
      std::string csv = "t,head,channel,value\n";
      for (std::size_t t = 0; t < mech_T; ++t)
        for (std::size_t h = 0; h < mech_H; ++h)
          for (std::size_t c = 0; c < mech_C; ++c) {
            csv += std::to_string(t) + "," + std::to_string(h) + "," +
                   std::to_string(c) + "," +
                   std::to_string(baseline.o[baseline.index(t, h, c)]) + "\n";
          }
      write_file(std::filesystem::path(mech_out) / "baseline_outputs.csv", csv);

      const auto attn = mechws::effective_attention(params);
      json attn_json{{"seq_len", mech_T},
                     {"n_heads", mech_H},
                     {"raw", attn.raw},
                     {"rectified", attn.rectified},
                     {"normalized", attn.normalized}};
      write_file(std::filesystem::path(mech_out) / "effective_attention.json",
                 attn_json.dump() + "\n");

      if (!mech_positions.empty()) {
        mechws::InterventionSpec spec;
        spec.positions = mech_positions;
        spec.scale = mech_scale;
        spec.target = mech_target == "attention_edges"
                          ? mechws::InterventionTarget::attention_edges
                          : mechws::InterventionTarget::state_write;
        if (spec.target == mechws::InterventionTarget::state_write) {
          const auto steered = mechws::wkv_forward(params, spec);
          std::string icsv = "t,head,channel,value\n";
          for (std::size_t t = 0; t < mech_T; ++t)
            for (std::size_t h = 0; h < mech_H; ++h)
              for (std::size_t c = 0; c < mech_C; ++c) {
                icsv += std::to_string(t) + "," + std::to_string(h) + "," +
                        std::to_string(c) + "," +
                        std::to_string(steered.o[steered.index(t, h, c)]) + "\n";
              }
          write_file(std::filesystem::path(mech_out) / "intervened_outputs.csv",
                     icsv);
        } else {
          const auto toy = mechws::random_toy(mech_seed, mech_T, mech_H, mech_C);
          const auto fwd = mechws::softmax_forward(toy, spec);
          write_file(std::filesystem::path(mech_out) / "softmax_attention.json",
                     json{{"attention", fwd.attention}}.dump() + "\n");
        }
      }

      if (!dose_scales.empty()) {
        const auto probe = mechws::ReadoutProbe::seeded(
            mech_seed, probe_outputs, mech_H * mech_C);
        const auto curve =
            mechws::dose_response(params, mech_positions, dose_scales, probe);
        std::string dcsv = "scale,kl_nats\n";
        for (const auto& point : curve) {
          dcsv += std::to_string(point.scale) + "," +
                  std::to_string(point.kl_nats) + "\n";
        }
        write_file(std::filesystem::path(mech_out) / "dose_response.csv", dcsv);
        write_file(std::filesystem::path(mech_out) / "dose_response.json",
                   dose_curve_json(curve).dump(2) + "\n");
      }
      std::cout << "mechanism artifacts written to " << mech_out << "\n";
      return kExitOk;
    }

    if (*rep) {
      std::vector<sega::report::ExperimentReport> experiments;
      for (const auto& path : report_inputs) {
        const json m = json::parse(read_file(path));
        sega::report::ExperimentReport e;
        e.label = m.at("experiment_label").get<std::string>();
        const json& triple = m.at("triple");
        e.triple.determinism_pct = triple.at("determinism_pct").get<double>();
        e.triple.preservation_pct = triple.at("preservation_pct").get<double>();
        if (!triple.at("correctness_pct").is_null()) {
          e.triple.correctness_pct = triple.at("correctness_pct").get<double>();
        }
        e.triple.correctness_note = triple.value("correctness_note", "");
        const double corr = e.triple.correctness_pct.value_or(0.0);
        e.point = sega::metrics::classify(
            sega::metrics::normalize(e.triple.determinism_pct),
            sega::metrics::normalize(e.triple.preservation_pct),
            sega::metrics::normalize(corr));
        if (m.contains("provenance")) {
          e.model_id = m["provenance"].value("model_id", "");
          e.condition = m["provenance"].value("condition", "");
          e.corpus_hash = m["provenance"].value("corpus_hash", "");
        }
        e.per_run = m.value("per_run", json::array());
        experiments.push_back(std::move(e));
      }
      std::set<sega::report::Format> formats;
      for (const auto& f : report_formats) {
        formats.insert(sega::report::format_from_string(f));
      }
      const auto written =
          sega::report::emit_report(experiments, formats, report_out);
      for (const auto& path : written) std::cout << "wrote " << path.string() << "\n";
      return kExitOk;
    }
  } catch (const sega::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncomplete;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncomplete;
  }
  return kExitUsage;
}
