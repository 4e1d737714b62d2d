#include "regraph/gateway.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace regraph {

namespace {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void require_json_object_payload(const ChatRequest& req) {
    nlohmann::json parsed = nlohmann::json::parse(req.user_payload, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw GatewayError(GatewayError::Kind::invalid_request,
                           "user payload must be a JSON object");
}

}  // namespace

// ---------------------------------------------------------------- HttpBackend

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
        throw GatewayError(GatewayError::Kind::invalid_request, "http backend needs a base URL");
}

std::string HttpBackend::complete(const ChatRequest& req) {
    last_prompt_ = 0;
    last_completion_ = 0;

    nlohmann::json body{
        {"model", req.model},
        {"messages",
         {{{"role", "system"}, {"content", req.system_prompt}},
          {{"role", "user"}, {"content", req.user_payload}}}},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long long>(cfg_.timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long long>(cfg_.timeout_s * 1000)));

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw GatewayError(GatewayError::Kind::auth,
                               "environment variable " + cfg_.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Result res = client.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout ||
            res.error() == httplib::Error::Read || res.error() == httplib::Error::Write)
            throw GatewayError(GatewayError::Kind::timeout,
                               "request timed out: " + httplib::to_string(res.error()));
        throw GatewayError(GatewayError::Kind::transport,
                           "transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403)
        throw GatewayError(GatewayError::Kind::auth,
                           "authorization rejected (HTTP " + std::to_string(res->status) + ")");
    if (res->status >= 500)
        throw GatewayError(GatewayError::Kind::transport,
                           "server error (HTTP " + std::to_string(res->status) + ")");
    if (res->status != 200)
        throw GatewayError(GatewayError::Kind::malformed_response,
                           "unexpected HTTP status " + std::to_string(res->status));

    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded())
        throw GatewayError(GatewayError::Kind::malformed_response,
                           "response body is not valid JSON");
    try {
        if (doc.contains("usage")) {
            last_prompt_ = doc["usage"].value("prompt_tokens", 0);
            last_completion_ = doc["usage"].value("completion_tokens", 0);
        }
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw GatewayError(GatewayError::Kind::malformed_response,
                           "response lacks choices[0].message.content");
    }
}

// ------------------------------------------------------------ ScriptedBackend

ScriptedBackend::ScriptedBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ScriptedBackend::fixture_key(const ChatRequest& req) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", req.temperature);
    std::uint64_t h = fnv1a64(req.model);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.system_prompt, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.user_payload, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(temp, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(std::to_string(req.max_tokens), h);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::filesystem::path ScriptedBackend::fixture_file(const std::filesystem::path& dir,
                                                    const ChatRequest& req) {
    return dir / (fixture_key(req) + ".txt");
}

void ScriptedBackend::store_fixture(const std::filesystem::path& dir, const ChatRequest& req,
                                    const std::string& response) {
    std::filesystem::create_directories(dir);
    std::ofstream out(fixture_file(dir, req), std::ios::binary);
    out << response;
}

std::string ScriptedBackend::complete(const ChatRequest& req) {
    std::filesystem::path file = fixture_file(dir_, req);
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        std::string head = req.user_payload.substr(0, 120);
        throw GatewayError(GatewayError::Kind::no_fixture,
                           "no fixture " + file.string() + " for request (payload head: " + head +
                               ")");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ----------------------------------------------------------- RecordingBackend

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string RecordingBackend::complete(const ChatRequest& req) {
    std::string response = inner_->complete(req);
    ScriptedBackend::store_fixture(dir_, req, response);
    return response;
}

// ------------------------------------------------------------------- Gateway

Gateway::Gateway(std::unique_ptr<Backend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(retry) {}

std::string Gateway::complete(const ChatRequest& req) {
    require_json_object_payload(req);
    telemetry_.requests.fetch_add(1);

    auto start = std::chrono::steady_clock::now();
    auto charge_latency = [&] {
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        telemetry_.latency_ms.fetch_add(static_cast<std::uint64_t>(elapsed));
    };

    int attempt = 0;
    for (;;) {
        try {
            std::string response = backend_->complete(req);
            telemetry_.prompt_tokens.fetch_add(backend_->last_prompt_tokens());
            telemetry_.completion_tokens.fetch_add(backend_->last_completion_tokens());
            charge_latency();
            return response;
        } catch (const GatewayError& e) {
            if (!e.retryable() || attempt >= retry_.max_retries) {
                telemetry_.failures.fetch_add(1);
                charge_latency();
                throw;
            }
            telemetry_.retries.fetch_add(1);
            long long delay = static_cast<long long>(retry_.backoff_base_ms) << attempt;
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            ++attempt;
        }
    }
}

}  // namespace regraph
