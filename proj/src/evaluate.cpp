#include "regraph/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "regraph/metrics.hpp"
#include "regraph/parse.hpp"

namespace regraph {

EvalMethod eval_method_from_string(std::string_view s) {
    if (s == "standard") return EvalMethod::standard;
    if (s == "cot") return EvalMethod::cot;
    if (s == "rag") return EvalMethod::rag;
    if (s == "regrapht") return EvalMethod::regrapht;
    if (s == "mcgs") return EvalMethod::mcgs;
    throw std::invalid_argument("unknown evaluation method: " + std::string(s));
}

const char* eval_method_name(EvalMethod m) {
    switch (m) {
        case EvalMethod::standard: return "standard";
        case EvalMethod::cot: return "cot";
        case EvalMethod::rag: return "rag";
        case EvalMethod::regrapht: return "regrapht";
        case EvalMethod::mcgs: return "mcgs";
    }
    return "unknown";
}

namespace {

bool is_search_method(EvalMethod m) {
    return m == EvalMethod::regrapht || m == EvalMethod::mcgs;
}

// Produces one candidate. Model misbehavior surfaces as nullopt upstream via
// the exceptions this lets through; only a clean reply yields code.
std::string generate_candidate(const TaskRecord& task, EvalMethod method, Gateway& gateway,
                               const RequestDefaults& defaults) {
    Bindings bindings{{"kernel", task.cpp_source}};
    if (method == EvalMethod::standard) {
        const auto req = render(prompt_template(PromptKind::standard), bindings, defaults);
        return parse_single_code(gateway.complete(req)).code;
    }
    const auto req = render(prompt_template(PromptKind::cot), bindings, defaults);
    const auto steps = parse_step_list(gateway.complete(req));
    return steps.steps.back().code;
}

SampleOutcome judge(const TaskRecord& task, int sample_index, const std::string& candidate,
                    Verifier& verifier) {
    SampleOutcome out;
    out.task_id = task.id;
    out.sample_index = sample_index;
    CodePair pair;
    pair.serial_source = task.cpp_source;
    pair.candidate_source = candidate;
    pair.test_inputs = task.tests;
    const VerificationReport report = verifier.verify(pair);
    out.passed = report.compiled && report.v_test >= 1.0;
    out.speedup = report.speedup;
    return out;
}

struct RowAccumulator {
    MetricRow row;

    void add(double p1, double pk, double s1, double sk) {
        ++row.tasks;
        row.pass_at_1 += (p1 - row.pass_at_1) / row.tasks;
        row.pass_at_k += (pk - row.pass_at_k) / row.tasks;
        row.speedup_at_1 += (s1 - row.speedup_at_1) / row.tasks;
        row.speedup_at_k += (sk - row.speedup_at_k) / row.tasks;
    }
};

nlohmann::json row_to_json(const MetricRow& row) {
    return {{"label", row.label},
            {"tasks", row.tasks},
            {"pass@1", row.pass_at_1},
            {"pass@k", row.pass_at_k},
            {"speedup@1", row.speedup_at_1},
            {"speedup@k", row.speedup_at_k}};
}

}  // namespace

EvalReport evaluate(const std::vector<TaskRecord>& dataset, EvalMethod method, Gateway& gateway,
                    Verifier& verifier, const EvalConfig& config, const ReGraph* graph,
                    Optimizer* optimizer) {
    if (method == EvalMethod::rag)
        throw std::invalid_argument(
            "the rag baseline is an interface stub: no retrieval corpus is wired in");
    const bool search = is_search_method(method);
    if (search && graph == nullptr)
        throw std::invalid_argument("search evaluation needs a reasoning graph");
    // A search returns one best answer, so its row is a single-sample row.
    const int samples = search ? 1 : config.samples;
    const int k = search ? 1 : config.k;
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (k < 1 || k > samples)
        throw std::invalid_argument("k must be in [1, samples]");

    EvalReport report;
    report.method = method;
    report.samples = samples;
    report.k = k;

    LlmOptimizer llm_optimizer(gateway, config.request);
    Optimizer& opt = optimizer != nullptr ? *optimizer : llm_optimizer;

    for (const auto& task : dataset) {
        EvalRecord record;
        record.task_id = task.id;
        if (task.tier)
            record.tier = task.tier;
        else if (task.trajectory_length)
            record.tier = tier_of(*task.trajectory_length);

        for (int s = 0; s < samples; ++s) {
            SampleOutcome out;
            out.task_id = task.id;
            out.sample_index = s;
            try {
                if (search) {
                    SearchTask search_task;
                    search_task.task_id = task.id;
                    search_task.initial_code = task.cpp_source;
                    search_task.serial_source = task.cpp_source;
                    search_task.tests = task.tests;
                    const SearchResult result =
                        method == EvalMethod::mcgs
                            ? run_mcgs(search_task, *graph, opt, verifier, config.search)
                            : run_traversal_baseline(search_task, *graph, opt, verifier,
                                                     config.search);
                    if (!result.best_code.empty())
                        out = judge(task, s, result.best_code, verifier);
                } else {
                    const std::string candidate =
                        generate_candidate(task, method, gateway, config.request);
                    out = judge(task, s, candidate, verifier);
                }
            } catch (const GatewayError&) {
                // failed sample, defaults already say so
            } catch (const ParseError&) {
            }
            record.samples.push_back(std::move(out));
        }
        report.records.push_back(std::move(record));
    }

    RowAccumulator overall;
    overall.row.label = "overall";
    RowAccumulator by_tier[3];
    RowAccumulator untiered;
    untiered.row.label = "untiered";
    for (int t = 0; t < 3; ++t) by_tier[t].row.label = tier_name(static_cast<Tier>(t));

    for (const auto& record : report.records) {
        const int n = static_cast<int>(record.samples.size());
        int c = 0;
        std::vector<double> speedups;
        std::vector<bool> passed;
        speedups.reserve(record.samples.size());
        passed.reserve(record.samples.size());
        for (const auto& sample : record.samples) {
            c += sample.passed ? 1 : 0;
            speedups.push_back(sample.speedup);
            passed.push_back(sample.passed);
        }
        const double p1 = pass_at_k(n, c, 1);
        const double pk = pass_at_k(n, c, k);
        const double s1 = speedup_at_k(speedups, passed, 1);
        const double sk = speedup_at_k(speedups, passed, k);
        overall.add(p1, pk, s1, sk);
        if (record.tier)
            by_tier[static_cast<int>(*record.tier)].add(p1, pk, s1, sk);
        else
            untiered.add(p1, pk, s1, sk);
    }

    report.overall = overall.row;
    for (const auto& acc : by_tier)
        if (acc.row.tasks > 0) report.tiers.push_back(acc.row);
    if (untiered.row.tasks > 0) report.tiers.push_back(untiered.row);
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& record : report.records) {
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& sample : record.samples) {
            samples.push_back({{"sample_index", sample.sample_index},
                               {"passed", sample.passed},
                               {"speedup", sample.speedup}});
        }
        nlohmann::json entry = {{"task_id", record.task_id}, {"samples", std::move(samples)}};
        entry["tier"] = record.tier ? nlohmann::json(tier_name(*record.tier)) : nullptr;
        records.push_back(std::move(entry));
    }
    nlohmann::json tiers = nlohmann::json::array();
    for (const auto& row : report.tiers) tiers.push_back(row_to_json(row));
    const nlohmann::json doc = {{"method", eval_method_name(report.method)},
                                {"samples", report.samples},
                                {"k", report.k},
                                {"records", std::move(records)},
                                {"overall", row_to_json(report.overall)},
                                {"tiers", std::move(tiers)}};
    return doc.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "method=" << eval_method_name(report.method) << " samples=" << report.samples
        << " k=" << report.k << "\n\n";
    const std::string pk = "pass@" + std::to_string(report.k);
    const std::string sk = "speedup@" + std::to_string(report.k);
    out << std::left << std::setw(10) << "slice" << std::right << std::setw(7) << "tasks"
        << std::setw(9) << "pass@1" << std::setw(10) << pk << std::setw(11) << "speedup@1"
        << std::setw(12) << sk << "\n";
    auto line = [&out](const MetricRow& row) {
        out << std::left << std::setw(10) << row.label << std::right << std::setw(7) << row.tasks
            << std::fixed << std::setprecision(3) << std::setw(9) << row.pass_at_1 << std::setw(10)
            << row.pass_at_k << std::setw(11) << row.speedup_at_1 << std::setw(12)
            << row.speedup_at_k << "\n";
        out.unsetf(std::ios::fixed);
    };
    line(report.overall);
    for (const auto& row : report.tiers) line(row);
    return out.str();
}

}  // namespace regraph
