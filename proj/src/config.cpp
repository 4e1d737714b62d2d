#include "regraph/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace regraph {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

long long to_int(const std::string& field, const std::string& value, long long lo,
                 long long hi) {
    long long out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(field, "expected an integer, got '" + value + "'");
    if (out < lo || out > hi)
        throw ConfigError(field, "value " + value + " out of range [" + std::to_string(lo) +
                                     ", " + std::to_string(hi) + "]");
    return out;
}

std::uint64_t to_uint64(const std::string& field, const std::string& value) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(field, "expected a nonnegative integer, got '" + value + "'");
    return out;
}

double to_double(const std::string& field, const std::string& value, double lo, double hi) {
    try {
        size_t used = 0;
        const double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        if (out < lo || out > hi)
            throw ConfigError(field, "value " + value + " out of range");
        return out;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + value + "'");
    }
}

void expect_one_of(const std::string& field, const std::string& value,
                   std::initializer_list<std::string_view> allowed) {
    if (std::find(allowed.begin(), allowed.end(), value) != allowed.end()) return;
    std::string opts;
    for (auto a : allowed) {
        if (!opts.empty()) opts += ", ";
        opts += a;
    }
    throw ConfigError(field, "'" + value + "' is not one of {" + opts + "}");
}

void expect_nonempty(const std::string& field, const std::string& value) {
    if (value.empty()) throw ConfigError(field, "must not be empty");
}

using Setter = std::function<void(AppConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& field_table() {
    static const std::map<std::string, Setter> table = {
        {"gateway.backend",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_one_of(f, v, {"scripted", "http", "record"});
             c.gateway.backend = v;
         }},
        {"gateway.base_url",
         [](AppConfig& c, const std::string&, const std::string& v) { c.gateway.base_url = v; }},
        {"gateway.api_path",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_nonempty(f, v);
             c.gateway.api_path = v;
         }},
        {"gateway.api_key_env",
         [](AppConfig& c, const std::string&, const std::string& v) {
             c.gateway.api_key_env = v;
         }},
        {"gateway.timeout_s",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.gateway.timeout_s = to_double(f, v, 1e-3, 1e6);
         }},
        {"gateway.model",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_nonempty(f, v);
             c.gateway.model = v;
         }},
        {"gateway.max_tokens",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.gateway.max_tokens = static_cast<int>(to_int(f, v, 1, 1 << 24));
         }},
        {"gateway.max_retries",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.gateway.max_retries = static_cast<int>(to_int(f, v, 0, 100));
         }},
        {"gateway.backoff_base_ms",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.gateway.backoff_base_ms = static_cast<int>(to_int(f, v, 0, 600000));
         }},
        {"verifier.kind",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_one_of(f, v, {"subprocess", "oracle"});
             c.verifier.kind = v;
         }},
        {"verifier.landscape",
         [](AppConfig& c, const std::string&, const std::string& v) {
             c.verifier.landscape = v;
         }},
        {"verifier.compile_serial",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_nonempty(f, v);
             c.verifier.compile_serial = v;
         }},
        {"verifier.compile_candidate",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_nonempty(f, v);
             c.verifier.compile_candidate = v;
         }},
        {"verifier.run",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_nonempty(f, v);
             c.verifier.run = v;
         }},
        {"verifier.compile_timeout_s",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.verifier.compile_timeout_s = to_double(f, v, 1e-3, 1e6);
         }},
        {"verifier.run_timeout_s",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.verifier.run_timeout_s = to_double(f, v, 1e-3, 1e6);
         }},
        {"verifier.warmups",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.verifier.warmups = static_cast<int>(to_int(f, v, 0, 1000));
         }},
        {"verifier.runs",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.verifier.runs = static_cast<int>(to_int(f, v, 1, 1000));
         }},
        {"verifier.work_root",
         [](AppConfig& c, const std::string&, const std::string& v) {
             c.verifier.work_root = v;
         }},
        {"search.budget",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.budget = static_cast<int>(to_int(f, v, 1, 1000000));
         }},
        {"search.rollouts",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.max_rollouts_per_iteration = static_cast<int>(to_int(f, v, 1, 1000000));
         }},
        {"search.max_steps",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.max_rollout_steps = static_cast<int>(to_int(f, v, 1, 1000000));
         }},
        {"search.lambda",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.lambda = to_double(f, v, 0.0, 1e9);
         }},
        {"search.epsilon",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.epsilon = to_double(f, v, 0.0, 1.0);
         }},
        {"search.reward_strategy",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             try {
                 c.search.reward_strategy = reward_strategy_from_string(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(f, e.what());
             }
         }},
        {"search.gamma",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.gamma = to_double(f, v, 0.0, 1.0);
         }},
        {"search.max_attempts",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.max_attempts = static_cast<int>(to_int(f, v, 1, 1000000));
         }},
        {"search.seed",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.seed = to_uint64(f, v);
         }},
        {"search.q0",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             c.search.q0 = to_double(f, v, -1e18, 1e18);
         }},
        {"paths.graph",
         [](AppConfig& c, const std::string&, const std::string& v) { c.paths.graph = v; }},
        {"paths.dataset",
         [](AppConfig& c, const std::string&, const std::string& v) { c.paths.dataset = v; }},
        {"paths.fixtures",
         [](AppConfig& c, const std::string&, const std::string& v) { c.paths.fixtures = v; }},
        {"paths.out",
         [](AppConfig& c, const std::string&, const std::string& v) { c.paths.out = v; }},
        {"log_level",
         [](AppConfig& c, const std::string& f, const std::string& v) {
             expect_one_of(f, v, {"debug", "info", "warn", "error"});
             c.log_level = v;
         }},
    };
    return table;
}

void apply_field(AppConfig& cfg, const std::string& field, const std::string& value,
                 const std::string& where) {
    const auto& table = field_table();
    const auto it = table.find(field);
    if (it == table.end())
        throw ConfigError(field, "unknown configuration key" +
                                     (where.empty() ? "" : " (" + where + ")"));
    it->second(cfg, field, value);
}

}  // namespace

AppConfig parse_app_config(std::string_view text, const std::string& source_name) {
    AppConfig cfg;
    std::string section;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            if (pos > text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("", where + ": malformed section header '" + line + "'");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section != "gateway" && section != "verifier" && section != "search" &&
                section != "paths")
                throw ConfigError(section, "unknown section (" + where + ")");
        } else {
            const size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("", where + ": expected 'key = value', got '" + line + "'");
            const std::string key = trim(std::string_view(line).substr(0, eq));
            const std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key.empty()) throw ConfigError("", where + ": empty key");
            const std::string field = section.empty() ? key : section + "." + key;
            apply_field(cfg, field, value, where);
        }
        if (pos > text.size()) break;
    }
    return cfg;
}

AppConfig load_app_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_app_config(buf.str(), file.filename().string());
}

void apply_override(AppConfig& cfg, const std::string& dotted_key, const std::string& value) {
    apply_field(cfg, dotted_key, trim(value), "flag");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    keys.reserve(field_table().size());
    for (const auto& [key, setter] : field_table()) keys.push_back(key);
    return keys;
}

std::string config_to_json(const AppConfig& cfg) {
    const nlohmann::json doc = {
        {"gateway",
         {{"backend", cfg.gateway.backend},
          {"base_url", cfg.gateway.base_url},
          {"api_path", cfg.gateway.api_path},
          {"api_key_env", cfg.gateway.api_key_env},
          {"timeout_s", cfg.gateway.timeout_s},
          {"model", cfg.gateway.model},
          {"max_tokens", cfg.gateway.max_tokens},
          {"max_retries", cfg.gateway.max_retries},
          {"backoff_base_ms", cfg.gateway.backoff_base_ms}}},
        {"verifier",
         {{"kind", cfg.verifier.kind},
          {"landscape", cfg.verifier.landscape},
          {"compile_serial", cfg.verifier.compile_serial},
          {"compile_candidate", cfg.verifier.compile_candidate},
          {"run", cfg.verifier.run},
          {"compile_timeout_s", cfg.verifier.compile_timeout_s},
          {"run_timeout_s", cfg.verifier.run_timeout_s},
          {"warmups", cfg.verifier.warmups},
          {"runs", cfg.verifier.runs},
          {"work_root", cfg.verifier.work_root}}},
        {"search",
         {{"budget", cfg.search.budget},
          {"rollouts", cfg.search.max_rollouts_per_iteration},
          {"max_steps", cfg.search.max_rollout_steps},
          {"lambda", cfg.search.lambda},
          {"epsilon", cfg.search.epsilon},
          {"reward_strategy", reward_strategy_name(cfg.search.reward_strategy)},
          {"gamma", cfg.search.gamma},
          {"max_attempts", cfg.search.max_attempts},
          {"seed", cfg.search.seed},
          {"q0", cfg.search.q0}}},
        {"paths",
         {{"graph", cfg.paths.graph},
          {"dataset", cfg.paths.dataset},
          {"fixtures", cfg.paths.fixtures},
          {"out", cfg.paths.out}}},
        {"log_level", cfg.log_level},
    };
    return doc.dump();
}

std::unique_ptr<Backend> make_backend(const AppConfig& cfg) {
    if (cfg.gateway.backend == "scripted") {
        if (cfg.paths.fixtures.empty())
            throw ConfigError("paths.fixtures", "scripted backend needs a fixture directory");
        return std::make_unique<ScriptedBackend>(cfg.paths.fixtures);
    }
    HttpBackendConfig http;
    http.base_url = cfg.gateway.base_url;
    http.path = cfg.gateway.api_path;
    http.api_key_env = cfg.gateway.api_key_env;
    http.timeout_s = cfg.gateway.timeout_s;
    if (http.base_url.empty())
        throw ConfigError("gateway.base_url", "http backend needs a base URL");
    auto live = std::make_unique<HttpBackend>(http);
    if (cfg.gateway.backend == "http") return live;
    if (cfg.paths.fixtures.empty())
        throw ConfigError("paths.fixtures", "record backend needs a fixture directory");
    return std::make_unique<RecordingBackend>(std::move(live), cfg.paths.fixtures);
}

std::unique_ptr<Verifier> make_verifier(const AppConfig& cfg) {
    if (cfg.verifier.kind == "oracle") {
        if (cfg.verifier.landscape.empty())
            throw ConfigError("verifier.landscape", "oracle verifier needs a landscape file");
        try {
            return std::make_unique<OracleVerifier>(
                OracleLandscape::from_file(cfg.verifier.landscape));
        } catch (const std::exception& e) {
            throw ConfigError("verifier.landscape", e.what());
        }
    }
    SubprocessVerifierConfig sub;
    sub.compile_serial_template = cfg.verifier.compile_serial;
    sub.compile_candidate_template = cfg.verifier.compile_candidate;
    sub.run_template = cfg.verifier.run;
    sub.compile_timeout_s = cfg.verifier.compile_timeout_s;
    sub.run_timeout_s = cfg.verifier.run_timeout_s;
    sub.warmups = cfg.verifier.warmups;
    sub.runs = cfg.verifier.runs;
    if (!cfg.verifier.work_root.empty()) sub.work_root = cfg.verifier.work_root;
    return std::make_unique<SubprocessVerifier>(sub);
}

}  // namespace regraph
