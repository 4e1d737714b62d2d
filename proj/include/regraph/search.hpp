#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "regraph/canon.hpp"
#include "regraph/gateway.hpp"
#include "regraph/graph.hpp"
#include "regraph/prompts.hpp"
#include "regraph/verify.hpp"

namespace regraph {

enum class RewardStrategy { hierarchical, strict, partial_credit, rollout_discounted };

RewardStrategy reward_strategy_from_string(std::string_view s);
const char* reward_strategy_name(RewardStrategy s);

struct SearchConfig {
    int budget = 200;                  // total optimizer calls
    int max_rollouts_per_iteration = 10;
    int max_rollout_steps = 8;
    double lambda = 0.1;               // visit penalty in the rollout policy
    double epsilon = 0.1;              // uniform-exploration probability
    RewardStrategy reward_strategy = RewardStrategy::hierarchical;
    double gamma = 0.9;                // discount for rollout_discounted
    int max_attempts = 5;              // per-edge retries in the traversal baseline
    std::uint64_t seed = 0;
    double q0 = 0.0;                   // optimistic prior for untried actions
};

// Tiered reward: failing any test dominates everything, a verified slowdown
// ranks by how close it came, a verified speedup ranks by the speedup itself.
double step_reward(const VerificationReport& report);

// Selection score of a child given its parent's visit count. Unvisited
// children score +infinity so expansion covers every successor once.
double p_ucb(double q_value, int visit_count, int parent_visits);

struct EdgeStats {
    double q_sa = 0.0;  // running mean of step rewards across traversals
    int n_sa = 0;
};

using EdgeStatsMap = std::map<std::pair<MethodId, MethodId>, EdgeStats>;

// Regularized rollout policy over the candidate actions: with probability
// 1-epsilon the argmax of q_sa - lambda*n_sa (untried actions score q0), with
// probability epsilon a uniform random action. Ties resolve lexicographically.
// `actions` must be non-empty and lexicographically sorted.
MethodId rollout_policy(const MethodId& state, const std::vector<MethodId>& actions,
                        const EdgeStatsMap& stats, const SearchConfig& cfg,
                        std::mt19937_64& rng);

// One sample for reward aggregation: a design's per-test outcome and speedup,
// plus its tiered step reward.
struct RewardSample {
    std::vector<bool> test_passes;
    double speedup = 0.0;
    double step_reward = 0.0;
};

// Aggregates a rollout's samples under the chosen strategy:
//   hierarchical        max of step rewards
//   strict              mean speedup over designs passing every test, -1 if none
//   partial_credit      per-test mean speedup over the designs passing that test
//   rollout_discounted  sum of gamma^t * step_reward_t
double reward_strategy_value(const std::vector<RewardSample>& samples, RewardStrategy strategy,
                             double gamma);

// Applies one optimization method to concrete code, guided by an edge example.
class Optimizer {
public:
    struct StepOutcome {
        bool suitable = false;
        std::string code;
    };

    virtual ~Optimizer() = default;
    virtual StepOutcome apply(const std::string& current_code, const MethodId& method,
                              const OptimizationExample& example) = 0;
};

// Language-model optimizer: renders the graph-guided prompt with the picked
// edge example and decodes the suitability verdict. Malformed replies count
// as unsuitable.
class LlmOptimizer : public Optimizer {
public:
    LlmOptimizer(Gateway& gateway, RequestDefaults defaults);
    StepOutcome apply(const std::string& current_code, const MethodId& method,
                      const OptimizationExample& example) override;

private:
    Gateway& gateway_;
    RequestDefaults defaults_;
};

// Synthetic optimizer for landscape-driven runs: code is the ">"-joined method
// path, so the oracle verifier can score it by lookup. Suitability comes from
// the landscape's "unsuitable" flags.
class PathOptimizer : public Optimizer {
public:
    explicit PathOptimizer(const OracleLandscape* landscape = nullptr);
    StepOutcome apply(const std::string& current_code, const MethodId& method,
                      const OptimizationExample& example) override;

private:
    const OracleLandscape* landscape_;
};

struct SearchTask {
    std::string task_id;
    std::string initial_code;
    std::string serial_source;  // reference fed to the verifier
    std::string driver_source;
    std::vector<TestInput> tests;
};

inline constexpr double kNoReward = -std::numeric_limits<double>::infinity();

struct SearchNode {
    MethodId state;
    double q_value = 0.0;
    int visit_count = 0;
    double best_reward = kNoReward;        // max reward backpropagated through this node
    std::optional<std::string> best_code;  // best verified realization at this state
    // Method sequence that produced best_code. States are shared across paths,
    // so this can differ from any one selection path reaching the node.
    std::vector<std::string> best_code_methods;
    double code_reward = kNoReward;        // reward of best_code
    bool expanded = false;
};

// The incrementally materialized sub-graph the selection phase walks. States
// are shared: reaching one state along two paths lands on one node.
class SearchTree {
public:
    explicit SearchTree(const MethodId& root);

    const MethodId& root() const { return root_; }
    bool contains(const MethodId& state) const { return nodes_.count(state) != 0; }
    SearchNode& node(const MethodId& state);
    const SearchNode& node(const MethodId& state) const;
    SearchNode& materialize(const MethodId& state);

    const std::vector<MethodId>& children(const MethodId& state) const;
    void set_children(const MethodId& state, std::vector<MethodId> kids);

    EdgeStatsMap& edge_stats() { return edge_stats_; }
    const EdgeStatsMap& edge_stats() const { return edge_stats_; }

    const std::map<MethodId, SearchNode>& nodes() const { return nodes_; }

private:
    MethodId root_;
    std::map<MethodId, SearchNode> nodes_;
    std::map<MethodId, std::vector<MethodId>> children_;
    EdgeStatsMap edge_stats_;
};

// Descends from the root by P-UCB until an unexpanded node, a node without
// materialized children, or a state already on the current path (cycle guard).
// The returned path starts at the root; on a cycle stop the revisited state
// appears twice.
std::vector<MethodId> select(const SearchTree& tree, const ReGraph& graph);

// Materializes every graph successor of `state` as a tree node (idempotent).
// Returns the newly created states.
std::vector<MethodId> expand(SearchTree& tree, const MethodId& state, const ReGraph& graph);

// Visit counts and running-mean Q along the path; each distinct state on the
// path is updated once per call. best_reward only ever increases.
void backpropagate(SearchTree& tree, const std::vector<MethodId>& path, double reward);

struct IterationEntry {
    int iteration = 0;
    std::string selected_state;
    std::vector<std::string> expanded_children;  // set on the expanding iteration
    std::vector<double> rollout_rewards;
    std::vector<int> rollout_steps;  // optimizer calls per rollout
};

struct SearchResult {
    std::string task_id;
    std::string best_code;
    double best_reward = kNoReward;        // reward of best_code; -1 if nothing verified
    std::vector<std::string> trajectory;   // method sequence that produced best_code
    int budget_used = 0;
    std::vector<IterationEntry> iteration_log;
};

// Monte Carlo graph search over a frozen reasoning graph.
SearchResult run_mcgs(const SearchTask& task, const ReGraph& graph, Optimizer& optimizer,
                      Verifier& verifier, const SearchConfig& cfg);

// Baseline: uniform random walks from the initial state, each chosen edge
// attempted up to max_attempts times, under the same budget accounting.
SearchResult run_traversal_baseline(const SearchTask& task, const ReGraph& graph,
                                    Optimizer& optimizer, Verifier& verifier,
                                    const SearchConfig& cfg);

}  // namespace regraph
