#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

namespace regraph {

struct ChatRequest {
    std::string model;
    std::string system_prompt;
    std::string user_payload;  // JSON object text
    double temperature = 0.0;
    int max_tokens = 4096;
};

class GatewayError : public std::runtime_error {
public:
    enum class Kind {
        transport,            // connection/5xx/transfer failure, retryable
        timeout,              // request deadline hit, retryable
        auth,                 // credential rejected or missing
        malformed_response,   // backend replied but not in the expected shape
        no_fixture,           // scripted backend has no entry for this request
        invalid_request,      // caller handed us a request violating the contract
    };

    GatewayError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }
    bool retryable() const { return kind_ == Kind::transport || kind_ == Kind::timeout; }

private:
    Kind kind_;
};

// Completion counters. Cumulative across a gateway's lifetime; latency is
// wall time spent inside backends, including retries.
struct Telemetry {
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint64_t> failures{0};
    std::atomic<std::uint64_t> prompt_tokens{0};
    std::atomic<std::uint64_t> completion_tokens{0};
    std::atomic<std::uint64_t> latency_ms{0};
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
    // Token accounting when the transport reports it; scripted replies do not.
    virtual std::uint64_t last_prompt_tokens() const { return 0; }
    virtual std::uint64_t last_completion_tokens() const { return 0; }
};

struct HttpBackendConfig {
    std::string base_url;                               // e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";
    std::string api_key_env;                            // env var holding the key; never the key itself
    double timeout_s = 120.0;
};

// OpenAI-style chat completion client.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);
    std::string complete(const ChatRequest& req) override;
    std::uint64_t last_prompt_tokens() const override { return last_prompt_; }
    std::uint64_t last_completion_tokens() const override { return last_completion_; }

private:
    HttpBackendConfig cfg_;
    std::uint64_t last_prompt_ = 0;
    std::uint64_t last_completion_ = 0;
};

// Deterministic replay backend: responses live in a directory of text files
// named by the request fingerprint.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::filesystem::path dir);
    std::string complete(const ChatRequest& req) override;

    // Stable fingerprint of a rendered request (64-bit FNV-1a, hex).
    static std::string fixture_key(const ChatRequest& req);
    static std::filesystem::path fixture_file(const std::filesystem::path& dir,
                                              const ChatRequest& req);
    // Helper for writing fixtures from tests and from --record runs.
    static void store_fixture(const std::filesystem::path& dir, const ChatRequest& req,
                              const std::string& response);

private:
    std::filesystem::path dir_;
};

// Wraps a live backend and captures every response as a scripted fixture.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::unique_ptr<Backend> inner, std::filesystem::path dir);
    std::string complete(const ChatRequest& req) override;
    std::uint64_t last_prompt_tokens() const override { return inner_->last_prompt_tokens(); }
    std::uint64_t last_completion_tokens() const override {
        return inner_->last_completion_tokens();
    }

private:
    std::unique_ptr<Backend> inner_;
    std::filesystem::path dir_;
};

struct RetryPolicy {
    int max_retries = 2;        // additional attempts after the first
    int backoff_base_ms = 500;  // doubles per retry
};

// Entry point for all completions: validates the request, dispatches to the
// backend, retries transient transport failures, accumulates telemetry.
// Thread-safe; backends are invoked under no lock beyond their own.
class Gateway {
public:
    Gateway(std::unique_ptr<Backend> backend, RetryPolicy retry = {});

    std::string complete(const ChatRequest& req);

    const Telemetry& telemetry() const { return telemetry_; }

private:
    std::unique_ptr<Backend> backend_;
    RetryPolicy retry_;
    Telemetry telemetry_;
};

}  // namespace regraph
