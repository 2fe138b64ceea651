#include "sega/providers.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sega/error.hpp"
#include "sega/extraction.hpp"
#include "sega/hash.hpp"

namespace sega::providers {

namespace {

using nlohmann::json;

constexpr int kMaxRetries = 3;       // retries after the initial attempt
constexpr int kBackoffCapMs = 30000;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << data;
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string resolve_credential(const ProviderConfig& config, bool required) {
  if (config.credential_env_var.empty()) {
    if (required) {
      raise(ErrorKind::credential,
            "remote endpoint requires a credential environment variable");
    }
    return "";
  }
  const char* value = std::getenv(config.credential_env_var.c_str());
  if ((value == nullptr || *value == '\0') && required) {
    raise(ErrorKind::credential,
          "credential variable " + config.credential_env_var + " is not set");
  }
  return value ? value : "";
}

std::string stub_response(const ProviderConfig& config, std::size_t run_index) {
  if (config.stub_source.empty()) {
    raise(ErrorKind::configuration, "stub endpoint requires stub_source");
  }
  const std::filesystem::path source(config.stub_source);
  if (std::filesystem::is_directory(source)) {
    const auto keyed =
        source / (extraction::run_file_prefix(run_index) + ".md");
    if (std::filesystem::exists(keyed)) return read_file(keyed);
    const auto fallback = source / "default.md";
    if (std::filesystem::exists(fallback)) return read_file(fallback);
    raise(ErrorKind::configuration,
          "stub source has no file for run " + std::to_string(run_index));
  }
  return read_file(source);
}

struct WireRequest {
  std::string path;
  httplib::Headers headers;
  std::string body;
};

WireRequest build_request(const ProviderConfig& config, const std::string& prompt,
                          double temperature) {
  WireRequest req;
  const json messages = json::array({{{"role", "user"}, {"content", prompt}}});
  if (config.endpoint_kind == EndpointKind::anthropic_messages) {
    const std::string key = resolve_credential(config, true);
    req.path = "/v1/messages";
    req.headers = {{"x-api-key", key}, {"anthropic-version", "2023-06-01"}};
    req.body = json{{"model", config.model_id},
                    {"max_tokens", config.max_output_tokens},
                    {"temperature", temperature},
                    {"messages", messages}}
                   .dump();
  } else {
    const bool remote = config.endpoint_kind == EndpointKind::openai_compatible;
    const std::string key = resolve_credential(config, remote);
    req.path = "/v1/chat/completions";
    if (!key.empty()) req.headers = {{"Authorization", "Bearer " + key}};
    req.body = json{{"model", config.model_id},
                    {"max_tokens", config.max_output_tokens},
                    {"temperature", temperature},
                    {"messages", messages}}
                   .dump();
  }
  return req;
}

void parse_reply(const ProviderConfig& config, const std::string& body,
                 GenerationRecord& record) {
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::exception&) {
    raise(ErrorKind::protocol, "provider reply is not valid JSON");
  }
  try {
    if (config.endpoint_kind == EndpointKind::anthropic_messages) {
      record.response_text = reply.at("content").at(0).at("text").get<std::string>();
      if (reply.contains("usage")) {
        record.input_tokens = reply["usage"].value("input_tokens", 0);
        record.output_tokens = reply["usage"].value("output_tokens", 0);
      }
    } else {
      record.response_text =
          reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (reply.contains("usage")) {
        record.input_tokens = reply["usage"].value("prompt_tokens", 0);
        record.output_tokens = reply["usage"].value("completion_tokens", 0);
      }
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::protocol,
          std::string("provider reply missing expected fields: ") + e.what());
  }
}

GenerationRecord http_generate(const ProviderConfig& config,
                               const std::string& prompt, double temperature,
                               std::size_t run_index) {
  const WireRequest req = build_request(config, prompt, temperature);
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_s, 0);
  client.set_read_timeout(config.timeout_s, 0);

  GenerationRecord record;
  record.run_index = run_index;
  record.prompt_hash = md5_hex(prompt);

  std::string last_failure;
  bool throttled = false;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    if (attempt > 0) {
      const int backoff = std::min(kBackoffCapMs,
                                   config.retry_base_delay_ms * (1 << (attempt - 1)));
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    }
    const auto start = std::chrono::steady_clock::now();
    httplib::Result res =
        client.Post(req.path, req.headers, req.body, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      throttled = false;
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      throttled = res->status == 429;
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      raise(ErrorKind::credential,
            "provider rejected the credential (HTTP " +
                std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
      raise(ErrorKind::protocol, "unexpected HTTP status " +
                                     std::to_string(res->status) + ": " +
                                     res->body.substr(0, 200));
    }
    record.latency_ms = elapsed;
    record.timestamp_utc = utc_now_iso8601();
    parse_reply(config, res->body, record);
    return record;
  }
  if (throttled) {
    raise(ErrorKind::throttle, "rate limited after " +
                                   std::to_string(kMaxRetries + 1) +
                                   " attempts (" + last_failure + ")");
  }
  raise(ErrorKind::protocol,
        "request failed after " + std::to_string(kMaxRetries + 1) +
            " attempts (" + last_failure + ")");
}

}  // namespace

EndpointKind endpoint_kind_from_string(const std::string& name) {
  if (name == "anthropic" || name == "anthropic_messages")
    return EndpointKind::anthropic_messages;
  if (name == "openai" || name == "openai_compatible")
    return EndpointKind::openai_compatible;
  if (name == "local" || name == "local_openai_compatible")
    return EndpointKind::local_openai_compatible;
  if (name == "stub") return EndpointKind::stub;
  raise(ErrorKind::format, "unknown endpoint kind: " + name);
}

std::string to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::anthropic_messages: return "anthropic_messages";
    case EndpointKind::openai_compatible: return "openai_compatible";
    case EndpointKind::local_openai_compatible: return "local_openai_compatible";
    case EndpointKind::stub: return "stub";
  }
  return "?";
}

GenerationRecord generate(const ProviderConfig& config, const std::string& prompt,
                          double temperature, std::size_t run_index) {
  if (prompt.empty()) {
    raise(ErrorKind::precondition, "prompt must be non-empty");
  }
  if (config.endpoint_kind == EndpointKind::stub) {
    const auto start = std::chrono::steady_clock::now();
    GenerationRecord record;
    record.run_index = run_index;
    record.prompt_hash = md5_hex(prompt);
    record.response_text = stub_response(config, run_index);
    record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    record.timestamp_utc = utc_now_iso8601();
    record.output_tokens = 0;
    return record;
  }
  return http_generate(config, prompt, temperature, run_index);
}

void save_manifest(const BatchManifest& manifest) {
  json records = json::array();
  for (const auto& r : manifest.records) {
    records.push_back({
        {"run", r.run_index},
        {"prompt_hash", r.prompt_hash},
        {"latency_ms", r.latency_ms},
        {"input_tokens", r.input_tokens},
        {"output_tokens", r.output_tokens},
        {"timestamp_utc", r.timestamp_utc},
        {"response_file", extraction::run_file_prefix(r.run_index) + "_response.md"},
    });
  }
  json j{
      {"experiment_label", manifest.experiment_label},
      {"provider",
       {
           {"endpoint_kind", to_string(manifest.provider.endpoint_kind)},
           {"model_id", manifest.provider.model_id},
           {"base_url", manifest.provider.base_url},
           {"credential_env_var", manifest.provider.credential_env_var},
           {"delay_ms", manifest.provider.delay_ms},
           {"max_output_tokens", manifest.provider.max_output_tokens},
           {"stub_source", manifest.provider.stub_source},
       }},
      {"n_runs", manifest.n_runs},
      {"temperature", manifest.temperature},
      {"status", manifest.status},
      {"last_successful_run", manifest.last_successful_run},
      {"prompt_hash", manifest.prompt_hash},
      {"records", records},
  };
  write_file(manifest.output_dir / "manifest.json", j.dump(2) + "\n");
}

BatchManifest load_manifest(const std::filesystem::path& batch_dir) {
  json j;
  try {
    j = json::parse(read_file(batch_dir / "manifest.json"));
  } catch (const json::exception& e) {
    raise(ErrorKind::format, std::string("malformed manifest.json: ") + e.what());
  }
  BatchManifest manifest;
  manifest.output_dir = batch_dir;
  try {
    manifest.experiment_label = j.at("experiment_label").get<std::string>();
    manifest.n_runs = j.at("n_runs").get<std::size_t>();
    manifest.temperature = j.at("temperature").get<double>();
    manifest.status = j.at("status").get<std::string>();
    manifest.last_successful_run = j.at("last_successful_run").get<std::size_t>();
    manifest.prompt_hash = j.at("prompt_hash").get<std::string>();
    const json& p = j.at("provider");
    manifest.provider.endpoint_kind =
        endpoint_kind_from_string(p.at("endpoint_kind").get<std::string>());
    manifest.provider.model_id = p.value("model_id", "");
    manifest.provider.base_url = p.value("base_url", "");
    manifest.provider.credential_env_var = p.value("credential_env_var", "");
    manifest.provider.delay_ms = p.value("delay_ms", 0);
    manifest.provider.max_output_tokens = p.value("max_output_tokens", 4096);
    manifest.provider.stub_source = p.value("stub_source", "");
    for (const auto& r : j.at("records")) {
      GenerationRecord record;
      record.run_index = r.at("run").get<std::size_t>();
      record.prompt_hash = r.value("prompt_hash", "");
      record.latency_ms = r.value("latency_ms", 0);
      record.input_tokens = r.value("input_tokens", 0);
      record.output_tokens = r.value("output_tokens", 0);
      record.timestamp_utc = r.value("timestamp_utc", "");
      const auto response_path =
          batch_dir / (extraction::run_file_prefix(record.run_index) + "_response.md");
      if (std::filesystem::exists(response_path)) {
        record.response_text = read_file(response_path);
      }
      manifest.records.push_back(std::move(record));
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::format,
          std::string("manifest.json missing required field: ") + e.what());
  }
  return manifest;
}

BatchManifest run_batch(const ProviderConfig& config, const std::string& prompt,
                        std::size_t n, int delay_ms, const std::string& label,
                        const std::filesystem::path& output_root) {
  if (n < 1) raise(ErrorKind::precondition, "run_batch requires n >= 1");
  if (prompt.empty()) raise(ErrorKind::precondition, "prompt must be non-empty");

  const std::filesystem::path batch_dir = output_root / label;
  std::error_code ec;
  std::filesystem::create_directories(batch_dir, ec);
  if (ec) {
    raise(ErrorKind::io, "cannot create batch directory " + batch_dir.string());
  }

  const std::string prompt_hash = md5_hex(prompt);
  BatchManifest manifest;
  manifest.experiment_label = label;
  manifest.provider = config;
  manifest.n_runs = n;
  manifest.temperature = 0.0;
  manifest.output_dir = batch_dir;
  manifest.prompt_hash = prompt_hash;
  manifest.status = "partial";

  // Resume support: pick up records for runs whose artifacts already exist.
  std::vector<GenerationRecord> previous;
  if (std::filesystem::exists(batch_dir / "manifest.json")) {
    BatchManifest existing = load_manifest(batch_dir);
    if (existing.prompt_hash != prompt_hash) {
      raise(ErrorKind::validation,
            "batch directory " + batch_dir.string() +
                " was produced from a different prompt; batches are append-only");
    }
    previous = std::move(existing.records);
  }
  auto find_previous = [&](std::size_t run_index) -> const GenerationRecord* {
    for (const auto& r : previous) {
      if (r.run_index == run_index) return &r;
    }
    return nullptr;
  };

  using clock = std::chrono::steady_clock;
  std::optional<clock::time_point> last_request_start;
  try {
    for (std::size_t i = 1; i <= n; ++i) {
      const auto response_path =
          batch_dir / (extraction::run_file_prefix(i) + "_response.md");
      if (std::filesystem::exists(response_path)) {
        GenerationRecord record;
        if (const GenerationRecord* prev = find_previous(i)) record = *prev;
        record.run_index = i;
        record.prompt_hash = prompt_hash;
        record.response_text = read_file(response_path);
        manifest.records.push_back(std::move(record));
        manifest.last_successful_run = i;
        continue;
      }
      if (last_request_start) {
        const auto next_start =
            *last_request_start + std::chrono::milliseconds(delay_ms);
        std::this_thread::sleep_until(next_start);
      }
      last_request_start = clock::now();
      GenerationRecord record = generate(config, prompt, manifest.temperature, i);
      write_file(response_path, record.response_text);  // persist-before-parse
      manifest.records.push_back(std::move(record));
      manifest.last_successful_run = i;
      save_manifest(manifest);
    }
  } catch (...) {
    manifest.status = "partial";
    save_manifest(manifest);
    throw;
  }
  manifest.status = "complete";
  save_manifest(manifest);
  return manifest;
}

}  // namespace sega::providers
