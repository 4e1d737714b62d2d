#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regraph/dataset.hpp"
#include "regraph/gateway.hpp"
#include "regraph/graph.hpp"
#include "regraph/parse.hpp"
#include "regraph/prompts.hpp"
#include "regraph/verify.hpp"

namespace regraph {

// A model-proposed optimization sequence before verification and relabeling.
struct RawTrajectory {
    std::string task_id;
    std::string origin_code;
    std::vector<ParsedStep> steps;
};

struct TrajectoryConfig {
    RequestDefaults acquire;   // temperature 0.7: diversity across samples
    RequestDefaults relabel;   // temperature 0.0: stable registry mapping
    int acquire_attempts = 2;  // completions consumed before a task is skipped
    int parallelism = 1;       // concurrent acquire+verify workers

    TrajectoryConfig() {
        acquire.temperature = 0.7;
        relabel.temperature = 0.0;
    }
};

// Asks the model for a step-by-step optimization of the task's code. Each
// malformed reply consumes one attempt; exhausting attempts throws ParseError.
RawTrajectory acquire(const TaskRecord& task, Gateway& gateway, const TrajectoryConfig& cfg);

struct VerifiedStep {
    ParsedStep step;
    double speedup = 0.0;  // metadata only; correctness gates, speed does not
};

struct VerifiedTrajectory {
    std::string task_id;
    std::string origin_code;
    std::vector<VerifiedStep> steps;
};

// Verifies each step's code against the task's serial reference, substituting
// each step's verified code as the next step's original (chain continuity).
// Truncates at the first failing step; an empty prefix means the trajectory
// is discarded.
VerifiedTrajectory verify_steps(const RawTrajectory& rt, const TaskRecord& task,
                                Verifier& verifier);

struct RelabelDecision {
    std::vector<RelabelItem> items;  // one per surviving step
};

// Asks the model which step methods already exist in the registry. The reply
// must be the same length as the step list; an existed=yes method must be in
// the registry (relabeling never invents names).
RelabelDecision relabel(const VerifiedTrajectory& vt, const std::set<MethodId>& registry,
                        Gateway& gateway, const TrajectoryConfig& cfg);

// Applies relabel decisions and converts to a mergeable trajectory.
Trajectory apply_relabel(const VerifiedTrajectory& vt, const RelabelDecision& decision,
                         const std::set<MethodId>& registry);

struct TaskBuildStatus {
    std::string task_id;
    std::string status;  // merged | acquire_failed | discarded_verification | relabel_failed
    std::string reason;
    int raw_steps = 0;
    int merged_steps = 0;
};

struct BuildReport {
    std::vector<TaskBuildStatus> tasks;
    std::map<int, int> trajectory_length_histogram;  // merged length -> count
    int merged = 0;
    int skipped = 0;
};

// Full pipeline: acquire -> verify_steps -> relabel -> merge, tasks processed
// in id order. Acquisition and verification fan out across workers; relabeling
// and merging stay sequential because both consult the evolving registry.
BuildReport build_graph(const std::vector<TaskRecord>& dataset, Gateway& gateway,
                        Verifier& verifier, const TrajectoryConfig& cfg, ReGraph& graph,
                        const MergeOptions& merge_opt = {});

}  // namespace regraph
