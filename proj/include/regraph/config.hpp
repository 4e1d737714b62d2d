#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "regraph/gateway.hpp"
#include "regraph/search.hpp"
#include "regraph/verify.hpp"

namespace regraph {

// Configuration problems carry the offending field (section.key) so the CLI
// can print a field-precise diagnostic and exit with the config error code.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : std::runtime_error(field.empty() ? msg : field + ": " + msg), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct GatewaySettings {
    std::string backend = "scripted";  // scripted | http | record
    std::string base_url;              // http/record backends
    std::string api_path = "/v1/chat/completions";
    std::string api_key_env;           // env var holding the key; never the key itself
    double timeout_s = 120.0;
    std::string model = "local";
    int max_tokens = 4096;
    int max_retries = 2;
    int backoff_base_ms = 500;
};

struct VerifierSettings {
    std::string kind = "subprocess";  // subprocess | oracle
    std::string landscape;            // oracle score table file
    std::string compile_serial = "c++ -O2 -o {out} {src}";
    std::string compile_candidate = "c++ -O2 -o {out} {src}";
    std::string run = "{bin}";
    double compile_timeout_s = 30.0;
    double run_timeout_s = 60.0;
    int warmups = 2;
    int runs = 5;
    std::string work_root;
};

struct PathSettings {
    std::string graph;     // reasoning graph file
    std::string dataset;   // JSONL task dataset
    std::string fixtures;  // scripted/recorded response directory
    std::string out;       // default artifact destination
};

struct AppConfig {
    GatewaySettings gateway;
    VerifierSettings verifier;
    SearchConfig search;
    PathSettings paths;
    std::string log_level = "info";
};

// INI-style text: [gateway] / [verifier] / [search] / [paths] sections plus
// the sectionless log_level key. Unknown sections, unknown keys, and
// out-of-range values raise ConfigError naming the field. source_name is
// only used in diagnostics.
AppConfig parse_app_config(std::string_view text, const std::string& source_name = "config");
AppConfig load_app_config(const std::filesystem::path& file);

// Applies one "section.key=value" override with the same validation as the
// file parser. Flags funnel through here, giving flag-over-config precedence.
void apply_override(AppConfig& cfg, const std::string& dotted_key, const std::string& value);

// Every recognized dotted key, sorted; the CLI mirrors each as a flag.
std::vector<std::string> config_keys();

// Effective-config echo embedded in output artifacts. JSON object text.
std::string config_to_json(const AppConfig& cfg);

// Wires the configured backend (scripted fixture replay, live HTTP, or
// recording) into a gateway. Validates path/field combinations.
std::unique_ptr<Backend> make_backend(const AppConfig& cfg);

// Builds the configured verifier; oracle kind loads the landscape file.
std::unique_ptr<Verifier> make_verifier(const AppConfig& cfg);

}  // namespace regraph
