#include "regraph/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "regraph/parse.hpp"

namespace regraph {

RewardStrategy reward_strategy_from_string(std::string_view s) {
    if (s == "hierarchical") return RewardStrategy::hierarchical;
    if (s == "strict") return RewardStrategy::strict;
    if (s == "partial_credit") return RewardStrategy::partial_credit;
    if (s == "rollout_discounted") return RewardStrategy::rollout_discounted;
    throw std::invalid_argument("unknown reward strategy: " + std::string(s));
}

const char* reward_strategy_name(RewardStrategy s) {
    switch (s) {
        case RewardStrategy::hierarchical: return "hierarchical";
        case RewardStrategy::strict: return "strict";
        case RewardStrategy::partial_credit: return "partial_credit";
        case RewardStrategy::rollout_discounted: return "rollout_discounted";
    }
    return "unknown";
}

double step_reward(const VerificationReport& report) {
    if (report.v_test < 1.0) return -1.0;
    if (report.speedup < 1.0) return report.speedup - 1.0;
    return report.speedup;
}

double p_ucb(double q_value, int visit_count, int parent_visits) {
    if (parent_visits < 1)
        throw std::invalid_argument("p_ucb: parent visit count must be >= 1");
    if (visit_count == 0) return std::numeric_limits<double>::infinity();
    return q_value + std::sqrt(2.0 * std::log(static_cast<double>(parent_visits)) /
                               static_cast<double>(visit_count));
}

MethodId rollout_policy(const MethodId& state, const std::vector<MethodId>& actions,
                        const EdgeStatsMap& stats, const SearchConfig& cfg,
                        std::mt19937_64& rng) {
    if (actions.empty()) throw std::invalid_argument("rollout_policy: no actions");

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < cfg.epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        return actions[pick(rng)];
    }

    const MethodId* best = &actions.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (const MethodId& a : actions) {
        auto it = stats.find({state, a});
        double score = (it == stats.end())
                           ? cfg.q0
                           : it->second.q_sa - cfg.lambda * it->second.n_sa;
        if (score > best_score) {
            best_score = score;
            best = &a;
        }
    }
    return *best;
}

double reward_strategy_value(const std::vector<RewardSample>& samples, RewardStrategy strategy,
                             double gamma) {
    if (samples.empty()) throw std::invalid_argument("reward_strategy_value: no samples");

    switch (strategy) {
        case RewardStrategy::hierarchical: {
            double best = -std::numeric_limits<double>::infinity();
            for (const RewardSample& s : samples) best = std::max(best, s.step_reward);
            return best;
        }
        case RewardStrategy::strict: {
            double total = 0.0;
            int all_pass = 0;
            for (const RewardSample& s : samples) {
                bool pass = !s.test_passes.empty() &&
                            std::all_of(s.test_passes.begin(), s.test_passes.end(),
                                        [](bool b) { return b; });
                if (pass) {
                    total += s.speedup;
                    ++all_pass;
                }
            }
            return all_pass == 0 ? -1.0 : total / all_pass;
        }
        case RewardStrategy::partial_credit: {
            std::size_t tests = 0;
            for (const RewardSample& s : samples)
                tests = std::max(tests, s.test_passes.size());
            if (tests == 0) return 0.0;
            double total = 0.0;
            for (std::size_t t = 0; t < tests; ++t) {
                double sum = 0.0;
                int passers = 0;
                for (const RewardSample& s : samples) {
                    if (t < s.test_passes.size() && s.test_passes[t]) {
                        sum += s.speedup;
                        ++passers;
                    }
                }
                if (passers > 0) total += sum / passers;
            }
            return total / static_cast<double>(tests);
        }
        case RewardStrategy::rollout_discounted: {
            double total = 0.0;
            double factor = 1.0;
            for (const RewardSample& s : samples) {
                total += factor * s.step_reward;
                factor *= gamma;
            }
            return total;
        }
    }
    throw std::logic_error("unreachable reward strategy");
}

// ---------------------------------------------------------------- Optimizers

LlmOptimizer::LlmOptimizer(Gateway& gateway, RequestDefaults defaults)
    : gateway_(gateway), defaults_(std::move(defaults)) {}

Optimizer::StepOutcome LlmOptimizer::apply(const std::string& current_code,
                                           const MethodId& method,
                                           const OptimizationExample& example) {
    Bindings bindings{
        {"source_code", current_code},
        {"example.origin", example.original_code},
        {"example.optimized", example.optimized_code},
        {"example.method", method.name},
    };
    ChatRequest req = render(prompt_template(PromptKind::regrapht), bindings, defaults_);
    std::string raw = gateway_.complete(req);
    try {
        Suitability s = parse_suitability(raw);
        if (!s.suitable) return {false, ""};
        return {true, *s.code};
    } catch (const ParseError&) {
        // A reply we cannot decode is treated as "does not apply".
        return {false, ""};
    }
}

PathOptimizer::PathOptimizer(const OracleLandscape* landscape) : landscape_(landscape) {}

Optimizer::StepOutcome PathOptimizer::apply(const std::string& current_code,
                                            const MethodId& method,
                                            const OptimizationExample&) {
    std::string next =
        current_code.empty() ? method.name : current_code + ">" + method.name;
    if (landscape_ != nullptr && landscape_->lookup(next).unsuitable) return {false, ""};
    return {true, next};
}

// ---------------------------------------------------------------- SearchTree

SearchTree::SearchTree(const MethodId& root) : root_(root) {
    nodes_[root].state = root;
}

SearchNode& SearchTree::node(const MethodId& state) {
    auto it = nodes_.find(state);
    if (it == nodes_.end()) throw std::out_of_range("state not in tree: " + state.name);
    return it->second;
}

const SearchNode& SearchTree::node(const MethodId& state) const {
    auto it = nodes_.find(state);
    if (it == nodes_.end()) throw std::out_of_range("state not in tree: " + state.name);
    return it->second;
}

SearchNode& SearchTree::materialize(const MethodId& state) {
    SearchNode& n = nodes_[state];
    n.state = state;
    return n;
}

const std::vector<MethodId>& SearchTree::children(const MethodId& state) const {
    static const std::vector<MethodId> empty;
    auto it = children_.find(state);
    return it == children_.end() ? empty : it->second;
}

void SearchTree::set_children(const MethodId& state, std::vector<MethodId> kids) {
    children_[state] = std::move(kids);
}

// ----------------------------------------------------------- Search phases

std::vector<MethodId> select(const SearchTree& tree, const ReGraph&) {
    std::vector<MethodId> path{tree.root()};
    std::set<MethodId> on_path{tree.root()};

    for (;;) {
        const MethodId& cur = path.back();
        const SearchNode& node = tree.node(cur);
        if (!node.expanded) return path;
        const std::vector<MethodId>& kids = tree.children(cur);
        if (kids.empty()) return path;  // terminal state

        const MethodId* choice = nullptr;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const MethodId& kid : kids) {
            const SearchNode& child = tree.node(kid);
            double score = p_ucb(child.q_value, child.visit_count, node.visit_count);
            if (choice == nullptr || score > best_score) {
                best_score = score;
                choice = &kid;
            }
        }
        path.push_back(*choice);
        if (!on_path.insert(*choice).second) return path;  // cycle guard
    }
}

std::vector<MethodId> expand(SearchTree& tree, const MethodId& state, const ReGraph& graph) {
    SearchNode& node = tree.node(state);
    if (node.expanded) return {};
    node.expanded = true;

    std::vector<MethodId> kids;
    std::vector<MethodId> created;
    for (const auto& [succ, count] : graph.successors(state)) {
        kids.push_back(succ);
        if (!tree.contains(succ)) {
            tree.materialize(succ);
            created.push_back(succ);
        }
    }
    tree.set_children(state, std::move(kids));
    return created;
}

void backpropagate(SearchTree& tree, const std::vector<MethodId>& path, double reward) {
    std::set<MethodId> seen;
    for (const MethodId& state : path) {
        if (!seen.insert(state).second) continue;  // cycle stop lists a state twice
        SearchNode& node = tree.node(state);
        node.visit_count += 1;
        node.q_value += (reward - node.q_value) / node.visit_count;
        node.best_reward = std::max(node.best_reward, reward);
    }
}

// ------------------------------------------------------------------ run_mcgs

namespace {

struct BudgetCounter {
    int limit = 0;
    int used = 0;
    int remaining() const { return limit - used; }
    void charge() { ++used; }
};

struct BestTracker {
    double reward = kNoReward;
    std::string code;
    std::vector<std::string> trajectory;
    bool any_step = false;

    void observe_step(double r, const VerificationReport& report, const std::string& code_text,
                      const std::vector<std::string>& methods) {
        any_step = true;
        if (report.v_test >= 1.0 && r > reward) {
            reward = r;
            code = code_text;
            trajectory = methods;
        }
    }
};

struct TaskChecker {
    const SearchTask& task;
    Verifier& verifier;

    VerificationReport check(const std::string& candidate) const {
        CodePair pair;
        pair.serial_source = task.serial_source;
        pair.candidate_source = candidate;
        pair.driver_source = task.driver_source;
        pair.test_inputs = task.tests;
        return verifier.verify(pair);
    }
};

RewardSample sample_from(const VerificationReport& report, double reward) {
    RewardSample s;
    s.test_passes = report.per_test;
    s.speedup = report.speedup;
    s.step_reward = reward;
    return s;
}

std::vector<MethodId> action_list(const ReGraph& graph, const MethodId& state) {
    std::vector<MethodId> actions;
    for (const auto& [succ, count] : graph.successors(state)) actions.push_back(succ);
    return actions;
}

// Simulates from the selection leaf. When nodes on the path have no verified
// code yet, the walk first re-applies their methods starting from the deepest
// realized ancestor (the root always holds the task's initial code); after
// that the rollout policy drives. Every optimizer call costs one budget unit.
double rollout_from(SearchTree& tree, const std::vector<MethodId>& path, const ReGraph& graph,
                    Optimizer& optimizer, const TaskChecker& checker, const SearchConfig& cfg,
                    std::mt19937_64& rng, BudgetCounter& budget, BestTracker& best,
                    int& steps_taken) {
    // Deepest ancestor on the path that carries code.
    std::size_t start = 0;
    for (std::size_t i = path.size(); i-- > 0;) {
        if (tree.node(path[i]).best_code.has_value()) {
            start = i;
            break;
        }
    }
    std::string code = tree.node(path[start]).best_code.value_or("");
    MethodId state = path[start];
    std::vector<MethodId> pending(path.begin() + start + 1, path.end());

    // The methods behind `code`, which may have reached this state along a
    // different path than the current selection.
    std::vector<std::string> methods_so_far = tree.node(path[start]).best_code_methods;

    std::vector<RewardSample> samples;
    bool aborted_unsuitable = false;
    steps_taken = 0;

    while (steps_taken < cfg.max_rollout_steps && budget.remaining() > 0) {
        MethodId action;
        if (!pending.empty()) {
            action = pending.front();
        } else {
            std::vector<MethodId> actions = action_list(graph, state);
            if (actions.empty()) break;  // terminal state
            action = rollout_policy(state, actions, tree.edge_stats(), cfg, rng);
        }

        budget.charge();
        ++steps_taken;

        const OptimizationExample& example = graph.pick_edge_example(state, action, code);
        Optimizer::StepOutcome outcome = optimizer.apply(code, action, example);
        if (!outcome.suitable) {
            // Costs budget but leaves edge statistics untouched.
            aborted_unsuitable = true;
            break;
        }

        VerificationReport report = checker.check(outcome.code);
        double reward = step_reward(report);
        samples.push_back(sample_from(report, reward));

        EdgeStats& es = tree.edge_stats()[{state, action}];
        es.n_sa += 1;
        es.q_sa += (reward - es.q_sa) / es.n_sa;

        methods_so_far.push_back(action.name);
        best.observe_step(reward, report, outcome.code, methods_so_far);

        if (report.v_test < 1.0) break;  // optimization failure ends the rollout

        // Verified: remember the realization at the reached state.
        SearchNode& reached = tree.materialize(action);
        if (reward > reached.code_reward) {
            reached.code_reward = reward;
            reached.best_code = outcome.code;
            reached.best_code_methods = methods_so_far;
        }

        code = outcome.code;
        state = action;
        if (!pending.empty()) pending.erase(pending.begin());
    }

    if (samples.empty()) {
        if (aborted_unsuitable) return -1.0;
        const SearchNode& leaf = tree.node(path.back());
        if (leaf.code_reward != kNoReward) return leaf.code_reward;
        return -1.0;
    }
    return reward_strategy_value(samples, cfg.reward_strategy, cfg.gamma);
}

}  // namespace

SearchResult run_mcgs(const SearchTask& task, const ReGraph& graph, Optimizer& optimizer,
                      Verifier& verifier, const SearchConfig& cfg) {
    if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (cfg.max_rollout_steps < 1)
        throw std::invalid_argument("max_rollout_steps must be >= 1");
    if (cfg.max_rollouts_per_iteration < 1)
        throw std::invalid_argument("max_rollouts_per_iteration must be >= 1");

    SearchTree tree(MethodId::init());
    // The root is the unoptimized program: verified by definition, reward of
    // the identity optimization.
    SearchNode& root = tree.materialize(tree.root());
    root.best_code = task.initial_code;
    root.code_reward = 1.0;

    TaskChecker checker{task, verifier};
    std::mt19937_64 rng(cfg.seed);
    BudgetCounter budget{cfg.budget, 0};
    BestTracker best;

    SearchResult result;
    result.task_id = task.task_id;

    int iteration = 0;
    while (budget.remaining() > 0) {
        ++iteration;
        int used_before = budget.used;

        std::vector<MethodId> path = select(tree, graph);
        const MethodId& leaf = path.back();

        IterationEntry entry;
        entry.iteration = iteration;
        entry.selected_state = leaf.name;

        if (!tree.node(leaf).expanded) {
            expand(tree, leaf, graph);
            for (const MethodId& kid : tree.children(leaf))
                entry.expanded_children.push_back(kid.name);
        }

        std::vector<double> rewards;
        for (int r = 0; r < cfg.max_rollouts_per_iteration && budget.remaining() > 0; ++r) {
            int steps = 0;
            double reward = rollout_from(tree, path, graph, optimizer, checker, cfg, rng,
                                         budget, best, steps);
            rewards.push_back(reward);
            entry.rollout_steps.push_back(steps);
        }
        if (rewards.empty()) break;  // exact budget exhaustion before any rollout

        // One backpropagation per iteration, carrying its best rollout.
        double value = *std::max_element(rewards.begin(), rewards.end());
        backpropagate(tree, path, value);

        entry.rollout_rewards = std::move(rewards);
        result.iteration_log.push_back(std::move(entry));

        // A terminal-only frontier consumes nothing; stop instead of spinning.
        if (budget.used == used_before) break;
    }

    result.budget_used = budget.used;
    if (best.reward != kNoReward) {
        result.best_code = best.code;
        result.best_reward = best.reward;
        result.trajectory = best.trajectory;
    } else {
        result.best_reward = best.any_step ? -1.0 : 0.0;
    }
    return result;
}

// -------------------------------------------------- run_traversal_baseline

SearchResult run_traversal_baseline(const SearchTask& task, const ReGraph& graph,
                                    Optimizer& optimizer, Verifier& verifier,
                                    const SearchConfig& cfg) {
    if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (cfg.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");

    TaskChecker checker{task, verifier};
    std::mt19937_64 rng(cfg.seed);
    BudgetCounter budget{cfg.budget, 0};
    BestTracker best;

    SearchResult result;
    result.task_id = task.task_id;

    MethodId root = MethodId::init();
    int walk_index = 0;
    while (budget.remaining() > 0) {
        if (graph.successors(root).empty()) break;  // no methods to walk
        ++walk_index;

        MethodId state = root;
        std::string code = task.initial_code;
        std::vector<std::string> methods_so_far;
        IterationEntry entry;
        entry.iteration = walk_index;

        for (;;) {
            std::vector<MethodId> actions = action_list(graph, state);
            if (actions.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
            MethodId action = actions[pick(rng)];

            bool advanced = false;
            for (int attempt = 0; attempt < cfg.max_attempts && budget.remaining() > 0;
                 ++attempt) {
                budget.charge();
                const OptimizationExample& example =
                    graph.pick_edge_example(state, action, code);
                Optimizer::StepOutcome outcome = optimizer.apply(code, action, example);
                if (!outcome.suitable) continue;

                VerificationReport report = checker.check(outcome.code);
                double reward = step_reward(report);
                entry.rollout_rewards.push_back(reward);

                if (report.v_test >= 1.0) {
                    methods_so_far.push_back(action.name);
                    best.observe_step(reward, report, outcome.code, methods_so_far);
                    code = outcome.code;
                    state = action;
                    advanced = true;
                    break;
                }
            }
            if (!advanced || budget.remaining() == 0) break;
        }

        entry.selected_state = state.name;
        entry.rollout_steps.push_back(static_cast<int>(methods_so_far.size()));
        result.iteration_log.push_back(std::move(entry));
    }

    result.budget_used = budget.used;
    if (best.reward != kNoReward) {
        result.best_code = best.code;
        result.best_reward = best.reward;
        result.trajectory = best.trajectory;
    } else {
        result.best_reward = best.any_step ? -1.0 : 0.0;
    }
    return result;
}

}  // namespace regraph
