#pragma once

#include <string>
#include <vector>

#include "regraph/dataset.hpp"
#include "regraph/gateway.hpp"
#include "regraph/prompts.hpp"
#include "regraph/verify.hpp"

namespace regraph {

enum class CurateStatus {
    accepted,
    rejected_local_header,   // quoted #include: file depends on local headers
    rejected_line_count,     // function bodies outside the size window
    rejected_third_party,    // denylisted library referenced
    rejected_extraction,     // a model stage failed: extraction, dependency, or reference gen
    rejected_verification,   // pair did not reach v_test == 1 and speedup >= 1
};

const char* curate_status_name(CurateStatus s);

struct CurateRules {
    int min_lines = 50;
    int max_lines = 500;
    std::vector<std::string> denylist = {"cudnn", "cublas", "cufft"};
};

// Total non-blank source lines inside function bodies (lines strictly between
// a body's braces). Heuristic brace scanner, comment- and string-aware.
int function_body_line_count(const std::string& source);

// Static screening only: local headers, size window, third-party denylist, in
// that order. Returns accepted when no rule fires.
CurateStatus curate_filter(const std::string& source, const CurateRules& rules);

struct CurationInput {
    std::string id;
    std::string content;
};

struct CurationItem {
    std::string id;
    CurateStatus status = CurateStatus::accepted;
    std::string reason;
};

struct CurationReport {
    std::vector<CurationItem> items;       // one per input, same order
    std::vector<TaskRecord> accepted;      // dataset records for accepted inputs
    int errored = 0;                       // backend failures, distinct from rejections
};

// Full pipeline per input file: static filter, kernel extraction, dependency
// completion, serial reference generation, then a verification gate keeping
// only pairs with v_test == 1 and speedup >= 1.
CurationReport curate_pipeline(const std::vector<CurationInput>& inputs, Gateway& gateway,
                               Verifier& verifier, const CurateRules& rules,
                               const RequestDefaults& defaults);

}  // namespace regraph
