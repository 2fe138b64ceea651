#include <doctest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sega/error.hpp"
#include "sega/providers.hpp"

using namespace sega;
using namespace sega::providers;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sega-providers" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_stub_file(const std::string& name,
                                      const std::string& text) {
  const auto dir = fresh_dir("stubsrc-" + name);
  const auto path = dir / "canned.md";
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

// Local chat-completions endpoint whose status sequence is scripted.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::vector<int> statuses)
      : statuses_(std::move(statuses)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   const std::size_t n = hit_count_++;
                   last_body_ = req.body;
                   const int status =
                       n < statuses_.size() ? statuses_[n] : statuses_.back();
                   if (status != 200) {
                     res.status = status;
                     res.set_content("busy", "text/plain");
                     return;
                   }
                   const json reply{
                       {"choices",
                        json::array({{{"message",
                                       {{"role", "assistant"},
                                        {"content", "canned reply"}}}}})},
                       {"usage",
                        {{"prompt_tokens", 12}, {"completion_tokens", 34}}}};
                   res.set_content(reply.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  std::size_t hits() const { return hit_count_.load(); }
  std::string last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::vector<int> statuses_;
  std::atomic<std::size_t> hit_count_{0};
  std::string last_body_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig local_config(const std::string& base_url) {
  ProviderConfig config;
  config.endpoint_kind = EndpointKind::local_openai_compatible;
  config.model_id = "local-model";
  config.base_url = base_url;
  config.retry_base_delay_ms = 1;  // keep retry tests fast
  config.timeout_s = 10;
  return config;
}

ProviderConfig stub_config(const std::string& source) {
  ProviderConfig config;
  config.endpoint_kind = EndpointKind::stub;
  config.model_id = "stub-model";
  config.stub_source = source;
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("providers");

TEST_CASE("stub provider echoes its canned text verbatim") {
  const std::string canned = "Sure! Here is code.\n\n```python\nx = 1\n```\n";
  const auto path = write_stub_file("echo", canned);
  const auto record = generate(stub_config(path.string()), "prompt", 0.0);
  CHECK(record.response_text == canned);
  CHECK(record.run_index == 1);
  CHECK_FALSE(record.prompt_hash.empty());
}

TEST_CASE("empty prompt is rejected before any provider work") {
  // A stub_source that would fail on open proves the guard fires first.
  try {
    generate(stub_config("/nonexistent/source.md"), "", 0.0);
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precondition);
  }
}

TEST_CASE("429 thrice then 200 succeeds after three retries") {
  ScriptedServer server({429, 429, 429, 200});
  const auto record = generate(local_config(server.base_url()), "hello", 0.0);
  CHECK(record.response_text == "canned reply");
  CHECK(record.input_tokens == 12);
  CHECK(record.output_tokens == 34);
  CHECK(record.latency_ms >= 0);
  CHECK(server.hits() == 4);

  const json body = json::parse(server.last_body());
  CHECK(body["model"] == "local-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["messages"][0]["content"] == "hello");
}

TEST_CASE("persistent 429 exhausts the retry budget as a throttle error") {
  ScriptedServer server({429, 429, 429, 429, 429});
  try {
    generate(local_config(server.base_url()), "hello", 0.0);
    FAIL("expected throttle error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::throttle);
  }
  CHECK(server.hits() == 4);  // initial attempt + 3 retries
}

TEST_CASE("auth rejection is a credential error without retries") {
  ScriptedServer server({401});
  try {
    generate(local_config(server.base_url()), "hello", 0.0);
    FAIL("expected credential error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::credential);
  }
  CHECK(server.hits() == 1);
}

TEST_CASE("remote endpoints demand a resolvable credential") {
  ProviderConfig config;
  config.endpoint_kind = EndpointKind::anthropic_messages;
  config.base_url = "https://api.example.invalid";
  SUBCASE("no variable named") { config.credential_env_var = ""; }
  SUBCASE("variable unset") {
    config.credential_env_var = "SEGA_TEST_NO_SUCH_KEY";
  }
  try {
    generate(config, "hello", 0.0);
    FAIL("expected credential error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::credential);
  }
}

TEST_CASE("malformed provider reply is a protocol error") {
  httplib::Server server;
  server.Post("/v1/chat/completions",
              [](const httplib::Request&, httplib::Response& res) {
                res.set_content("{\"unexpected\": true}", "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  try {
    generate(local_config("http://127.0.0.1:" + std::to_string(port)), "x", 0.0);
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::protocol);
  }
  server.stop();
  thread.join();
}

TEST_CASE("anthropic-style endpoint: key header, version header, reply shape") {
  httplib::Server server;
  std::string seen_key, seen_version, seen_body;
  server.Post("/v1/messages",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_key = req.get_header_value("x-api-key");
                seen_version = req.get_header_value("anthropic-version");
                seen_body = req.body;
                const json reply{
                    {"content", json::array({{{"type", "text"},
                                              {"text", "anthropic reply"}}})},
                    {"usage", {{"input_tokens", 7}, {"output_tokens", 21}}}};
                res.set_content(reply.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("SEGA_TEST_FAKE_KEY", "sk-fake-key", 1);
  ProviderConfig config;
  config.endpoint_kind = EndpointKind::anthropic_messages;
  config.model_id = "m-1";
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.credential_env_var = "SEGA_TEST_FAKE_KEY";
  config.max_output_tokens = 512;

  const auto record = generate(config, "the prompt", 0.0);
  server.stop();
  thread.join();

  CHECK(record.response_text == "anthropic reply");
  CHECK(record.input_tokens == 7);
  CHECK(record.output_tokens == 21);
  CHECK(seen_key == "sk-fake-key");
  CHECK(seen_version == "2023-06-01");
  const json body = json::parse(seen_body);
  CHECK(body["model"] == "m-1");
  CHECK(body["max_tokens"] == 512);
  CHECK(body["messages"][0]["role"] == "user");
}

TEST_CASE("stub batch persists one response file per record") {
  const auto path = write_stub_file("batch", "body text\n");
  const auto root = fresh_dir("batch-root");
  const auto manifest = run_batch(stub_config(path.string()), "prompt", 3, 0,
                                  "exp_a", root);
  CHECK(manifest.records.size() == 3);
  CHECK(manifest.status == "complete");
  for (int i = 1; i <= 3; ++i) {
    CHECK(std::filesystem::exists(root / "exp_a" /
                                  ("0" + std::to_string(i) + "_response.md")));
  }
  CHECK(std::filesystem::exists(root / "exp_a" / "manifest.json"));
  for (const auto& record : manifest.records) {
    CHECK(record.prompt_hash == manifest.prompt_hash);
  }
}

TEST_CASE("resuming skips existing runs and never rewrites them") {
  // Two stub sources with distinct content stand in for a scripted
  // interruption: runs 1-2 come from source A, the resumed runs 3-5 from
  // source B, so any rewrite of 1-2 would be visible.
  const auto source_a = write_stub_file("resume-a", "from A\n");
  const auto source_b = write_stub_file("resume-b", "from B\n");
  const auto root = fresh_dir("resume-root");

  run_batch(stub_config(source_a.string()), "prompt", 2, 0, "exp_r", root);
  const auto before_01 = slurp(root / "exp_r" / "01_response.md");

  const auto manifest =
      run_batch(stub_config(source_b.string()), "prompt", 5, 0, "exp_r", root);
  CHECK(manifest.records.size() == 5);
  CHECK(slurp(root / "exp_r" / "01_response.md") == before_01);
  CHECK(slurp(root / "exp_r" / "02_response.md") == "from A\n");
  CHECK(slurp(root / "exp_r" / "03_response.md") == "from B\n");
  CHECK(slurp(root / "exp_r" / "05_response.md") == "from B\n");
}

TEST_CASE("a batch directory is append-only across prompts") {
  const auto source = write_stub_file("appendonly", "text\n");
  const auto root = fresh_dir("appendonly-root");
  run_batch(stub_config(source.string()), "prompt one", 1, 0, "exp_p", root);
  try {
    run_batch(stub_config(source.string()), "prompt two", 2, 0, "exp_p", root);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
  }
}

TEST_CASE("request starts are spaced by at least the configured delay") {
  const auto source = write_stub_file("delay", "text\n");
  const auto root = fresh_dir("delay-root");
  const auto start = std::chrono::steady_clock::now();
  run_batch(stub_config(source.string()), "prompt", 3, 60, "exp_d", root);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  CHECK(elapsed >= 120);  // two inter-request gaps
}

TEST_CASE("stub directory sources key canned responses by run index") {
  const auto dir = fresh_dir("keyed-stub");
  std::ofstream(dir / "01.md") << "first\n";
  std::ofstream(dir / "02.md") << "second\n";
  std::ofstream(dir / "default.md") << "fallback\n";
  const auto root = fresh_dir("keyed-root");
  const auto manifest =
      run_batch(stub_config(dir.string()), "prompt", 3, 0, "exp_k", root);
  CHECK(manifest.records[0].response_text == "first\n");
  CHECK(manifest.records[1].response_text == "second\n");
  CHECK(manifest.records[2].response_text == "fallback\n");
}

TEST_CASE("manifest round-trips through save and load") {
  const auto source = write_stub_file("roundtrip", "payload\n");
  const auto root = fresh_dir("roundtrip-root");
  const auto saved =
      run_batch(stub_config(source.string()), "prompt", 2, 0, "exp_m", root);
  const auto loaded = load_manifest(root / "exp_m");
  CHECK(loaded.experiment_label == saved.experiment_label);
  CHECK(loaded.n_runs == saved.n_runs);
  CHECK(loaded.status == "complete");
  CHECK(loaded.prompt_hash == saved.prompt_hash);
  REQUIRE(loaded.records.size() == 2);
  CHECK(loaded.records[0].response_text == "payload\n");
}

TEST_SUITE_END();
