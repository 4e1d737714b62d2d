#include "regraph/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <json.hpp>

namespace regraph {

RawTrajectory acquire(const TaskRecord& task, Gateway& gateway, const TrajectoryConfig& cfg) {
    Bindings bindings{{"kernel", task.cpp_source}};
    ChatRequest req = render(prompt_template(PromptKind::reasoning), bindings, cfg.acquire);

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, cfg.acquire_attempts); ++attempt) {
        std::string raw = gateway.complete(req);
        try {
            ParsedStepList list = parse_step_list(raw);
            RawTrajectory rt;
            rt.task_id = task.id;
            rt.origin_code = task.cpp_source;
            rt.steps = std::move(list.steps);
            return rt;
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw ParseError("acquisition failed after " + std::to_string(cfg.acquire_attempts) +
                     " attempts: " + last_error);
}

VerifiedTrajectory verify_steps(const RawTrajectory& rt, const TaskRecord& task,
                                Verifier& verifier) {
    VerifiedTrajectory vt;
    vt.task_id = rt.task_id;
    vt.origin_code = rt.origin_code;

    for (const ParsedStep& step : rt.steps) {
        CodePair pair;
        pair.serial_source = task.cpp_source;
        pair.candidate_source = step.code;
        pair.test_inputs = task.tests;
        VerificationReport report = verifier.verify(pair);
        if (!report.compiled || report.v_test < 1.0) break;  // truncate at first failure

        VerifiedStep vs;
        vs.step = step;
        vs.speedup = report.speedup;
        vt.steps.push_back(std::move(vs));
    }
    return vt;
}

RelabelDecision relabel(const VerifiedTrajectory& vt, const std::set<MethodId>& registry,
                        Gateway& gateway, const TrajectoryConfig& cfg) {
    nlohmann::json methods = nlohmann::json::array();
    for (const MethodId& m : registry) methods.push_back(m.name);
    nlohmann::json process = nlohmann::json::array();
    for (const VerifiedStep& vs : vt.steps)
        process.push_back({{"think", vs.step.think},
                           {"method", vs.step.method},
                           {"detail", vs.step.detail},
                           {"code", vs.step.code}});

    Bindings bindings{{"methods", methods}, {"process", process}};
    ChatRequest req = render(prompt_template(PromptKind::relabel), bindings, cfg.relabel);
    std::string raw = gateway.complete(req);

    std::vector<RelabelItem> items = parse_relabel_list(raw);
    if (items.size() != vt.steps.size())
        throw ParseError("relabel returned " + std::to_string(items.size()) +
                         " decisions for " + std::to_string(vt.steps.size()) + " steps");
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].existed &&
            registry.count(MethodId::from_raw(items[i].method)) == 0)
            throw ParseError("relabel claims method '" + items[i].method +
                                 "' exists but the registry has no such method",
                             static_cast<int>(i));
    }
    return RelabelDecision{std::move(items)};
}

Trajectory apply_relabel(const VerifiedTrajectory& vt, const RelabelDecision& decision,
                         const std::set<MethodId>& registry) {
    if (decision.items.size() != vt.steps.size())
        throw std::invalid_argument("decision count does not match step count");

    Trajectory t;
    t.task_id = vt.task_id;
    std::string previous = vt.origin_code;
    for (std::size_t i = 0; i < vt.steps.size(); ++i) {
        const VerifiedStep& vs = vt.steps[i];
        const RelabelItem& item = decision.items[i];

        TrajectoryStep step;
        // existed=yes maps onto the registry name; existed=no keeps the step's
        // own method, canonicalized. Either way no new name is invented.
        step.method = item.existed ? MethodId::from_raw(item.method)
                                   : MethodId::from_raw(vs.step.method);
        if (item.existed && registry.count(step.method) == 0)
            throw std::invalid_argument("relabel decision names unknown method '" +
                                        item.method + "'");
        step.example.original_code = previous;
        step.example.optimized_code = vs.step.code;
        step.example.reasoning = vs.step.think;
        step.example.detail = vs.step.detail;
        step.example.source_task_id = vt.task_id;
        previous = vs.step.code;
        t.steps.push_back(std::move(step));
    }
    return t;
}

BuildReport build_graph(const std::vector<TaskRecord>& dataset, Gateway& gateway,
                        Verifier& verifier, const TrajectoryConfig& cfg, ReGraph& graph,
                        const MergeOptions& merge_opt) {
    // Deterministic processing order, independent of dataset file order.
    std::vector<const TaskRecord*> order;
    order.reserve(dataset.size());
    for (const TaskRecord& rec : dataset) order.push_back(&rec);
    std::sort(order.begin(), order.end(),
              [](const TaskRecord* a, const TaskRecord* b) { return a->id < b->id; });

    struct Phase1Result {
        std::optional<VerifiedTrajectory> vt;
        std::string status;
        std::string reason;
        int raw_steps = 0;
    };
    std::vector<Phase1Result> phase1(order.size());

    // Phase 1: acquisition + verification, parallel across tasks.
    auto run_task = [&](std::size_t index) {
        const TaskRecord& task = *order[index];
        Phase1Result& out = phase1[index];
        try {
            RawTrajectory rt = acquire(task, gateway, cfg);
            out.raw_steps = static_cast<int>(rt.steps.size());
            VerifiedTrajectory vt = verify_steps(rt, task, verifier);
            if (vt.steps.empty()) {
                out.status = "discarded_verification";
                out.reason = "no step survived verification";
            } else {
                out.vt = std::move(vt);
            }
        } catch (const std::exception& e) {
            out.status = "acquire_failed";
            out.reason = e.what();
        }
    };

    int workers = std::max(1, cfg.parallelism);
    if (workers == 1 || order.size() <= 1) {
        for (std::size_t i = 0; i < order.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= order.size()) return;
                    run_task(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // Phase 2: relabel + merge, sequential in id order; both read the registry
    // as it evolves.
    BuildReport report;
    for (std::size_t i = 0; i < order.size(); ++i) {
        TaskBuildStatus status;
        status.task_id = order[i]->id;
        status.raw_steps = phase1[i].raw_steps;
        if (!phase1[i].vt) {
            status.status = phase1[i].status;
            status.reason = phase1[i].reason;
            ++report.skipped;
            report.tasks.push_back(std::move(status));
            continue;
        }
        try {
            const VerifiedTrajectory& vt = *phase1[i].vt;
            RelabelDecision decision = relabel(vt, graph.registry(), gateway, cfg);
            Trajectory t = apply_relabel(vt, decision, graph.registry());
            graph.merge_trajectory(t, merge_opt);
            status.status = "merged";
            status.merged_steps = static_cast<int>(t.steps.size());
            report.trajectory_length_histogram[status.merged_steps] += 1;
            ++report.merged;
        } catch (const std::exception& e) {
            status.status = "relabel_failed";
            status.reason = e.what();
            ++report.skipped;
        }
        report.tasks.push_back(std::move(status));
    }
    return report;
}

}  // namespace regraph
