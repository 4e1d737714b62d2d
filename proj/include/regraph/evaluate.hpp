#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regraph/dataset.hpp"
#include "regraph/gateway.hpp"
#include "regraph/graph.hpp"
#include "regraph/prompts.hpp"
#include "regraph/search.hpp"
#include "regraph/verify.hpp"

namespace regraph {

enum class EvalMethod {
    standard,  // single-shot optimization prompt
    cot,       // step-by-step prompt, final step's code is the candidate
    rag,       // example-conditioned baseline; interface only, not implemented
    regrapht,  // graph-guided random traversal
    mcgs,      // graph-guided Monte Carlo search
};

EvalMethod eval_method_from_string(std::string_view s);
const char* eval_method_name(EvalMethod m);

// One judged candidate. speedup is recorded even when the sample failed;
// aggregation zeroes failed samples itself.
struct SampleOutcome {
    std::string task_id;
    int sample_index = 0;
    bool passed = false;
    double speedup = 0.0;

    bool operator==(const SampleOutcome&) const = default;
};

struct EvalRecord {
    std::string task_id;
    std::optional<Tier> tier;
    std::vector<SampleOutcome> samples;
};

// One aggregated line: the whole dataset or a tier slice. Values are means of
// the per-task metrics across the row's tasks.
struct MetricRow {
    std::string label;
    int tasks = 0;
    double pass_at_1 = 0.0;
    double pass_at_k = 0.0;
    double speedup_at_1 = 0.0;
    double speedup_at_k = 0.0;
};

struct EvalReport {
    EvalMethod method = EvalMethod::standard;
    int samples = 1;
    int k = 1;
    std::vector<EvalRecord> records;
    MetricRow overall;
    std::vector<MetricRow> tiers;  // easy/medium/hard/untiered rows actually present
};

struct EvalConfig {
    int samples = 1;               // candidates per task; search methods force 1
    int k = 1;                     // the k of pass@k / speedup@k
    RequestDefaults request;       // prompt-method model settings
    SearchConfig search;           // search-method settings
};

// Runs the method over every task, judges every sample, aggregates overall
// and per tier. Search methods need `graph`; they run one search per task
// (samples forced to 1) and judge the returned best code. `optimizer`
// overrides the language-model optimizer for search methods when given.
// Malformed model replies and gateway failures become failed samples; a
// misconfiguration (k out of range, missing graph, the rag stub) throws.
EvalReport evaluate(const std::vector<TaskRecord>& dataset, EvalMethod method, Gateway& gateway,
                    Verifier& verifier, const EvalConfig& config, const ReGraph* graph = nullptr,
                    Optimizer* optimizer = nullptr);

std::string eval_report_to_json(const EvalReport& report);

// Aligned-column table, one row per slice.
std::string eval_report_table(const EvalReport& report);

}  // namespace regraph
