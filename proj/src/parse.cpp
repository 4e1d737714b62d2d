#include "regraph/parse.hpp"

#include <cctype>

#include <json.hpp>

namespace regraph {

namespace {

// Finds the span of the first balanced JSON value starting with `open` that
// actually parses; respects string literals and escapes while scanning.
std::optional<nlohmann::json> extract_first(std::string_view raw, char open, char close) {
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != open) continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == open) {
                ++depth;
            } else if (c == close) {
                --depth;
                if (depth == 0) {
                    nlohmann::json parsed = nlohmann::json::parse(
                        raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;  // balanced but invalid; try the next start
                }
            }
        }
    }
    return std::nullopt;
}

nlohmann::json extract_array(std::string_view raw) {
    std::optional<nlohmann::json> found = extract_first(raw, '[', ']');
    if (!found) throw ParseError("no JSON array found in response");
    return std::move(*found);
}

nlohmann::json extract_object(std::string_view raw) {
    std::optional<nlohmann::json> found = extract_first(raw, '{', '}');
    if (!found) throw ParseError("no JSON object found in response");
    return std::move(*found);
}

std::string field_string(const nlohmann::json& obj, const char* name, int index = -1) {
    auto it = obj.find(name);
    if (it == obj.end()) {
        std::string msg = std::string("missing field '") + name + "'";
        if (index >= 0) msg += " at element " + std::to_string(index);
        throw ParseError(msg, index);
    }
    if (!it->is_string()) {
        std::string msg = std::string("field '") + name + "' must be a string";
        if (index >= 0) msg += " at element " + std::to_string(index);
        throw ParseError(msg, index);
    }
    return it->get<std::string>();
}

std::string nonempty_field(const nlohmann::json& obj, const char* name, int index = -1) {
    std::string value = field_string(obj, name, index);
    if (value.empty()) {
        std::string msg = std::string("field '") + name + "' must be non-empty";
        if (index >= 0) msg += " at element " + std::to_string(index);
        throw ParseError(msg, index);
    }
    return value;
}

// Strict yes/no: case-insensitive after trimming, anything else is an error.
bool parse_yes_no(const nlohmann::json& value, const char* name, int index = -1) {
    if (!value.is_string())
        throw ParseError(std::string("field '") + name + "' must be a yes/no string", index);
    std::string s = value.get<std::string>();
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string t;
    for (std::size_t i = b; i < e; ++i)
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    if (t == "yes") return true;
    if (t == "no") return false;
    throw ParseError(std::string("field '") + name + "' must be yes or no, got '" + s + "'",
                     index);
}

}  // namespace

ParsedStepList parse_step_list(std::string_view raw) {
    nlohmann::json arr = extract_array(raw);
    if (arr.empty()) throw ParseError("step list is empty");
    ParsedStepList out;
    int index = 0;
    for (const nlohmann::json& item : arr) {
        if (!item.is_object())
            throw ParseError("step list element " + std::to_string(index) + " is not an object",
                             index);
        ParsedStep step;
        step.think = nonempty_field(item, "think", index);
        step.method = nonempty_field(item, "method", index);
        step.detail = nonempty_field(item, "detail", index);
        step.code = nonempty_field(item, "code", index);
        out.steps.push_back(std::move(step));
        ++index;
    }
    return out;
}

std::string serialize_step_list(const ParsedStepList& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ParsedStep& s : list.steps)
        arr.push_back({{"think", s.think},
                       {"method", s.method},
                       {"detail", s.detail},
                       {"code", s.code}});
    return arr.dump();
}

Suitability parse_suitability(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    Suitability result;
    auto it = obj.find("suitable");
    if (it == obj.end()) throw ParseError("missing field 'suitable'");
    result.suitable = parse_yes_no(*it, "suitable");
    if (result.suitable) {
        std::string code = nonempty_field(obj, "optimization");
        result.code = std::move(code);
    }
    return result;
}

std::vector<RelabelItem> parse_relabel_list(std::string_view raw) {
    nlohmann::json arr = extract_array(raw);
    std::vector<RelabelItem> out;
    int index = 0;
    for (const nlohmann::json& item : arr) {
        if (!item.is_object())
            throw ParseError("relabel element " + std::to_string(index) + " is not an object",
                             index);
        auto it = item.find("existed");
        if (it == item.end())
            throw ParseError("missing field 'existed' at element " + std::to_string(index), index);
        RelabelItem rel;
        rel.existed = parse_yes_no(*it, "existed", index);
        rel.method = nonempty_field(item, "method", index);
        out.push_back(std::move(rel));
        ++index;
    }
    return out;
}

SingleCode parse_single_code(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    SingleCode out;
    out.think = field_string(obj, "think");
    out.code = nonempty_field(obj, "code");
    return out;
}

std::string parse_updated_code(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    return nonempty_field(obj, "updated_code");
}

std::vector<ExtractedKernel> parse_kernel_extraction(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    auto kernels_it = obj.find("kernels");
    if (kernels_it == obj.end() || !kernels_it->is_array())
        throw ParseError("missing or non-array field 'kernels'");
    auto opts_it = obj.find("optimizations");
    if (opts_it != obj.end() && opts_it->is_array() && !opts_it->empty() &&
        opts_it->size() != kernels_it->size())
        throw ParseError("kernels and optimizations lists differ in length");
    std::vector<ExtractedKernel> out;
    int index = 0;
    for (const nlohmann::json& item : *kernels_it) {
        if (!item.is_object())
            throw ParseError("kernel element " + std::to_string(index) + " is not an object",
                             index);
        ExtractedKernel k;
        k.name = nonempty_field(item, "name", index);
        k.content = nonempty_field(item, "content", index);
        out.push_back(std::move(k));
        ++index;
    }
    return out;
}

DependencyResult parse_dependency(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    DependencyResult out;
    auto it = obj.find("success");
    if (it == obj.end()) throw ParseError("missing field 'success'");
    out.success = parse_yes_no(*it, "success");
    out.reason = field_string(obj, "reason");
    if (out.success) out.rewrite = nonempty_field(obj, "rewrite");
    return out;
}

SerialGenResult parse_serial_gen(std::string_view raw) {
    nlohmann::json obj = extract_object(raw);
    SerialGenResult out;
    out.serial = nonempty_field(obj, "serial");
    out.driver = nonempty_field(obj, "driver");
    auto it = obj.find("test_inputs");
    if (it == obj.end() || !it->is_array() || it->empty())
        throw ParseError("missing or empty 'test_inputs' array");
    int index = 0;
    for (const nlohmann::json& item : *it) {
        if (!item.is_string())
            throw ParseError("test input " + std::to_string(index) + " must be a string", index);
        out.test_inputs.push_back(item.get<std::string>());
        ++index;
    }
    return out;
}

}  // namespace regraph
