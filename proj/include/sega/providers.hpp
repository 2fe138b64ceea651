#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sega::providers {

enum class EndpointKind {
  anthropic_messages,
  openai_compatible,
  local_openai_compatible,
  stub,
};

struct ProviderConfig {
  EndpointKind endpoint_kind = EndpointKind::stub;
  std::string model_id;
  std::string base_url;            // scheme://host[:port]
  std::string credential_env_var;  // name of the env var holding the key
  int delay_ms = 0;
  int max_output_tokens = 4096;
  // Canned-response source for the stub endpoint: a file (same text every
  // run) or a directory of `<NN>.md` files keyed by run index, with
  // `default.md` as fallback.
  std::string stub_source;
  int retry_base_delay_ms = 500;
  int timeout_s = 120;
};

struct GenerationRecord {
  std::size_t run_index = 1;  // 1-based
  std::string prompt_hash;
  std::string response_text;
  std::int64_t latency_ms = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::string timestamp_utc;
};

struct BatchManifest {
  std::string experiment_label;
  ProviderConfig provider;
  std::size_t n_runs = 0;
  double temperature = 0.0;
  std::vector<GenerationRecord> records;
  std::filesystem::path output_dir;
  std::string status;  // "complete" or "partial"
  std::size_t last_successful_run = 0;
  std::string prompt_hash;
};

EndpointKind endpoint_kind_from_string(const std::string& name);
std::string to_string(EndpointKind kind);

// One request. Transient failures (transport, 429, 5xx) are retried up to
// three times with exponential backoff before an error surfaces.
GenerationRecord generate(const ProviderConfig& config, const std::string& prompt,
                          double temperature, std::size_t run_index = 1);

// Sequential n-run batch with at least `delay_ms` between request starts.
// Each response is persisted to `<label>/<NN>_response.md` before anything
// else touches it; rerunning skips indices whose response file exists.
BatchManifest run_batch(const ProviderConfig& config, const std::string& prompt,
                        std::size_t n, int delay_ms, const std::string& label,
                        const std::filesystem::path& output_root);

void save_manifest(const BatchManifest& manifest);
BatchManifest load_manifest(const std::filesystem::path& batch_dir);

}  // namespace sega::providers
