#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "regraph/gateway.hpp"

namespace regraph {

enum class PromptKind {
    reasoning,       // step-by-step optimization trajectory acquisition
    relabel,         // map step methods onto the existing method registry
    standard,        // single-shot optimization baseline
    cot,             // step-by-step baseline (same response schema as reasoning)
    rag,             // example-conditioned optimization baseline
    regrapht,        // graph-guided optimization with suitability judgment
    kernel_extract,  // pull kernels + their optimization labels out of a source file
    dependency,      // make an extracted kernel self-contained
    serial_gen,      // produce serial reference + driver + test inputs for a kernel
};

struct PromptTemplate {
    PromptKind kind;
    std::string_view system_text;
    // Placeholder names the user payload must bind, dotted names nest
    // ("example.origin" lands at payload["example"]["origin"]).
    std::vector<std::string_view> placeholders;
};

const PromptTemplate& prompt_template(PromptKind kind);

const char* prompt_kind_name(PromptKind kind);

using Bindings = std::map<std::string, nlohmann::json>;

// Compact JSON object with exactly the template's placeholders filled in.
// Deterministic: keys serialize sorted, so equal bindings give equal bytes.
// Throws GatewayError(invalid_request) on missing or unknown bindings and on
// values that do not serialize (invalid UTF-8).
std::string render_user_payload(const PromptTemplate& tmpl, const Bindings& bindings);

struct RequestDefaults {
    std::string model = "local";
    double temperature = 0.0;
    int max_tokens = 4096;
};

ChatRequest render(const PromptTemplate& tmpl, const Bindings& bindings,
                   const RequestDefaults& defaults);

}  // namespace regraph
