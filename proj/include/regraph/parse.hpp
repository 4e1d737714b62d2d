#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace regraph {

// Raised when a model response cannot be decoded into the expected shape.
// element_index is the offending list position when the shape is a list.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, int element_index = -1)
        : std::runtime_error(msg), element_index_(element_index) {}
    int element_index() const { return element_index_; }

private:
    int element_index_ = -1;
};

struct ParsedStep {
    std::string think;
    std::string method;
    std::string detail;
    std::string code;

    bool operator==(const ParsedStep&) const = default;
};

struct ParsedStepList {
    std::vector<ParsedStep> steps;

    bool operator==(const ParsedStepList&) const = default;
};

// Locates the first JSON array in free-form model output (code fences and
// surrounding prose tolerated) and validates the four-field step schema.
ParsedStepList parse_step_list(std::string_view raw);

std::string serialize_step_list(const ParsedStepList& list);

struct Suitability {
    bool suitable = false;
    std::optional<std::string> code;  // present iff suitable
};

// Decodes the graph-guided optimizer's reply: {"suitable": yes/no,
// "optimization": code}. A yes requires non-empty code.
Suitability parse_suitability(std::string_view raw);

struct RelabelItem {
    bool existed = false;
    std::string method;
};

// Decodes the relabel reply: a list of {"existed": yes/no, "method": name}.
std::vector<RelabelItem> parse_relabel_list(std::string_view raw);

struct SingleCode {
    std::string think;
    std::string code;
};

// Decodes the single-shot baseline reply: {"think": ..., "code": ...}.
SingleCode parse_single_code(std::string_view raw);

// Decodes the example-conditioned baseline reply: {"updated_code": ...}.
std::string parse_updated_code(std::string_view raw);

struct ExtractedKernel {
    std::string name;
    std::string content;
};

// Decodes the kernel-extraction reply; optimizations lists are validated for
// length parity but only kernels are returned.
std::vector<ExtractedKernel> parse_kernel_extraction(std::string_view raw);

struct DependencyResult {
    bool success = false;
    std::string reason;
    std::optional<std::string> rewrite;  // present iff success
};

// Decodes the dependency-completion reply: {"success": yes/no, "reason",
// "rewrite"}.
DependencyResult parse_dependency(std::string_view raw);

struct SerialGenResult {
    std::string serial;
    std::string driver;
    std::vector<std::string> test_inputs;
};

// Decodes the serial-reference reply: {"serial", "driver", "test_inputs"}.
SerialGenResult parse_serial_gen(std::string_view raw);

}  // namespace regraph
