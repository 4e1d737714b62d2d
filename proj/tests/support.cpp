#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace regraph::testing {

NaiveGraph naive_merge(const std::vector<NaiveTrajectory>& trajectories,
                       const std::string& init_name) {
    NaiveGraph g;
    g.nodes.insert(init_name);
    for (const auto& t : trajectories) {
        std::string state = init_name;
        for (const auto& step : t.steps) {
            g.nodes.insert(step.method);
            g.edges[{state, step.method}].push_back(step.example_tag);
            state = step.method;
        }
    }
    return g;
}

TrajectoryCorpus make_random_trajectories(std::uint64_t seed, int count, int alphabet,
                                          int max_len) {
    std::mt19937_64 rng(seed);
    TrajectoryCorpus corpus;
    for (int t = 0; t < count; ++t) {
        Trajectory typed;
        NaiveTrajectory plain;
        typed.task_id = "task-" + std::to_string(t);
        const int len = 1 + static_cast<int>(rng() % max_len);
        std::string code = "code-" + std::to_string(t) + "-0";
        for (int s = 0; s < len; ++s) {
            char name[8];
            std::snprintf(name, sizeof name, "m%02d", static_cast<int>(rng() % alphabet));
            std::string next = "code-" + std::to_string(t) + "-" + std::to_string(s + 1);
            TrajectoryStep step;
            step.method = MethodId::from_raw(name);
            step.example.original_code = code;
            step.example.optimized_code = next;
            step.example.reasoning = "r";
            step.example.detail = "";
            step.example.source_task_id = typed.task_id;
            typed.steps.push_back(step);
            plain.steps.push_back({name, next});
            code = std::move(next);
        }
        corpus.typed.push_back(std::move(typed));
        corpus.plain.push_back(std::move(plain));
    }
    return corpus;
}

bool graphs_agree(const ReGraph& merged, const NaiveGraph& reference) {
    std::set<std::string> merged_nodes;
    for (const auto& node : merged.nodes()) merged_nodes.insert(node.name);
    if (merged_nodes != reference.nodes) return false;
    if (merged.edges().size() != reference.edges.size()) return false;
    for (const auto& [key, examples] : merged.edges()) {
        const auto it = reference.edges.find({key.first.name, key.second.name});
        if (it == reference.edges.end()) return false;
        if (examples.size() != it->second.size()) return false;
        for (std::size_t i = 0; i < examples.size(); ++i)
            if (examples[i].optimized_code != it->second[i]) return false;
    }
    return true;
}

namespace {

// Calls fn(indices) for every k-subset of [0, n).
template <typename Fn>
void for_each_subset(int n, int k, Fn&& fn) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
}

}  // namespace

double pass_at_k_enum(int n, int c, int k) {
    long long hits = 0;
    long long total = 0;
    for_each_subset(n, k, [&](const std::vector<int>& idx) {
        ++total;
        for (int i : idx) {
            if (i < c) {  // the first c samples are the correct ones
                ++hits;
                break;
            }
        }
    });
    return static_cast<double>(hits) / static_cast<double>(total);
}

double speedup_at_k_enum(const std::vector<double>& speedups, const std::vector<bool>& passed,
                         int k) {
    const int n = static_cast<int>(speedups.size());
    double sum = 0.0;
    long long total = 0;
    for_each_subset(n, k, [&](const std::vector<int>& idx) {
        ++total;
        double best = 0.0;
        for (int i : idx) {
            const double value = passed[i] ? speedups[i] : 0.0;
            best = std::max(best, value);
        }
        sum += best;
    });
    return sum / static_cast<double>(total);
}

double strict_reward_oracle(const std::vector<OracleDesign>& designs) {
    double sum = 0.0;
    int count = 0;
    for (const auto& d : designs) {
        bool all = true;
        for (bool p : d.test_passes) all = all && p;
        if (all) {
            sum += d.speedup;
            ++count;
        }
    }
    return count == 0 ? -1.0 : sum / count;
}

double partial_reward_oracle(const std::vector<OracleDesign>& designs) {
    std::size_t m = 0;
    for (const auto& d : designs) m = std::max(m, d.test_passes.size());
    if (m == 0) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        double sum = 0.0;
        int passers = 0;
        for (const auto& d : designs) {
            if (t < d.test_passes.size() && d.test_passes[t]) {
                sum += d.speedup;
                ++passers;
            }
        }
        if (passers > 0) total += sum / passers;
    }
    return total / static_cast<double>(m);
}

double rollout_reward_oracle(const std::vector<double>& step_rewards, double gamma) {
    double total = 0.0;
    double weight = 1.0;
    for (double r : step_rewards) {
        total += weight * r;
        weight *= gamma;
    }
    return total;
}

std::string greedy_policy_oracle(const std::vector<std::string>& actions,
                                 const std::map<std::string, ActionStat>& stats, double lambda,
                                 double q0) {
    if (actions.empty()) throw std::invalid_argument("no actions");
    std::string best;
    double best_score = 0.0;
    bool first = true;
    for (const auto& a : actions) {
        const auto it = stats.find(a);
        const double score =
            (it != stats.end() && it->second.tried) ? it->second.q - lambda * it->second.n : q0;
        if (first || score > best_score) {
            best = a;
            best_score = score;
            first = false;
        }
    }
    return best;
}

double chi_square_crit_99(int df) {
    // Standard upper 1% points; Wilson-Hilferty beyond the table.
    static const double table[] = {0.0,    6.635,  9.210,  11.345, 13.277, 15.086, 16.812,
                                   18.475, 20.090, 21.666, 23.209, 24.725, 26.217};
    if (df >= 1 && df <= 12) return table[df];
    const double z99 = 2.3263478740408408;  // Phi^{-1}(0.99)
    const double a = 2.0 / (9.0 * df);
    const double cube = 1.0 - a + z99 * std::sqrt(a);
    return df * cube * cube * cube;
}

double sign_test_p(int wins, int trials) {
    if (trials <= 0) return 1.0;
    // P(X >= wins), X ~ Binomial(trials, 1/2), summed in log space.
    long double p = 0.0L;
    for (int i = wins; i <= trials; ++i) {
        long double log_c = std::lgamma(trials + 1.0L) - std::lgamma(i + 1.0L) -
                            std::lgamma(trials - i + 1.0L);
        p += std::exp(log_c - trials * std::log(2.0L));
    }
    return static_cast<double>(std::min(p, 1.0L));
}

namespace {

nlohmann::json example_json(const std::string& src, const std::string& dst, int ordinal) {
    return {{"original", src + "#" + std::to_string(ordinal)},
            {"optimized", dst + "#" + std::to_string(ordinal)},
            {"reasoning", "synthetic"},
            {"detail", ""},
            {"task", "synthetic"}};
}

std::string graph_json_from_edges(const std::vector<std::string>& names,
                                  const std::set<std::pair<int, int>>& edges) {
    // -1 indexes the initial state.
    auto name_of = [&](int i) { return i < 0 ? std::string("__init__") : names[i]; };
    nlohmann::json nodes = nlohmann::json::array();
    nodes.push_back({{"id", "__init__"}});
    for (const auto& n : names) nodes.push_back({{"id", n}});
    nlohmann::json edge_list = nlohmann::json::array();
    int ordinal = 0;
    for (const auto& [src, dst] : edges) {
        nlohmann::json e = {{"src", name_of(src)},
                            {"dst", name_of(dst)},
                            {"examples", nlohmann::json::array()}};
        e["examples"].push_back(example_json(name_of(src), name_of(dst), ordinal++));
        edge_list.push_back(std::move(e));
    }
    const nlohmann::json doc = {
        {"version", 1}, {"init", "__init__"}, {"nodes", nodes}, {"edges", edge_list}};
    return doc.dump(2) + "\n";
}

}  // namespace

RandomGraphSpec build_random_cyclic_graph(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RandomGraphSpec spec;
    spec.nodes = 5 + static_cast<int>(rng() % 36);  // 5..40
    for (int i = 0; i < spec.nodes; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "m%02d", i);
        spec.names.emplace_back(buf);
    }
    std::set<std::pair<int, int>> edges;
    // Backbone: node i hangs off a random predecessor, so everything is
    // reachable from the initial state.
    for (int i = 0; i < spec.nodes; ++i) {
        const int parent = i == 0 ? -1 : static_cast<int>(rng() % (i + 1)) - 1;
        edges.insert({parent, i});
    }
    // Cycle density: at least 30% of nodes close a cycle by pointing at a
    // node at or before them (self-loops allowed).
    const int wanted_back = (spec.nodes * 3 + 9) / 10;
    int made = 0;
    for (int i = 0; i < spec.nodes && made < wanted_back; ++i) {
        const int target = static_cast<int>(rng() % (i + 1));  // 0..i, closes a cycle
        if (edges.insert({i, target}).second) ++made;
    }
    spec.back_edges = made;
    // Sink-free: every method node keeps at least one way out.
    for (int i = 0; i < spec.nodes; ++i) {
        bool has_out = false;
        for (const auto& [src, dst] : edges) {
            if (src == i) {
                has_out = true;
                break;
            }
        }
        if (!has_out) edges.insert({i, static_cast<int>(rng() % spec.nodes)});
    }
    spec.json = graph_json_from_edges(spec.names, edges);
    return spec;
}

PlantedLandscape build_planted_landscape(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PlantedLandscape out;
    const int node_count = 8 + static_cast<int>(rng() % 5);  // 8..12
    std::vector<std::string> names;
    for (int i = 0; i < node_count; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "m%02d", i);
        names.emplace_back(buf);
    }
    std::set<std::pair<int, int>> edges;
    for (int i = 0; i < node_count; ++i) {
        const int parent = i == 0 ? -1 : static_cast<int>(rng() % (i + 1)) - 1;
        edges.insert({parent, i});
    }
    // Densify so both searches face real branching, plus cycles.
    const int extra = node_count;
    for (int e = 0; e < extra; ++e) {
        const int src = static_cast<int>(rng() % node_count);
        const int dst = static_cast<int>(rng() % node_count);
        edges.insert({src, dst});
    }
    for (int i = 0; i < node_count; ++i) {
        bool has_out = false;
        for (const auto& [src, dst] : edges)
            if (src == i) has_out = true;
        if (!has_out) edges.insert({i, static_cast<int>(rng() % node_count)});
    }

    // The planted optimum follows graph edges from the initial state.
    const int length = 3 + static_cast<int>(rng() % 3);  // 3..5
    std::vector<int> path;
    int state = -1;
    for (int d = 0; d < length; ++d) {
        std::vector<int> outs;
        for (const auto& [src, dst] : edges)
            if (src == state) outs.push_back(dst);
        const int next = outs[rng() % outs.size()];
        path.push_back(next);
        state = next;
    }

    // The landscape file is one flat object: score entries keyed by the
    // ">"-joined path, a "default" fallback, and the synthetic test count.
    nlohmann::json doc = nlohmann::json::object();
    doc["synthetic_tests"] = 4;
    doc["default"] = {{"v_test", 1.0}, {"speedup", 1.0}};
    std::string key;
    for (std::size_t d = 0; d < path.size(); ++d) {
        if (!key.empty()) key += ">";
        key += names[path[d]];
        out.optimum_path.push_back(names[path[d]]);
        const bool last = d + 1 == path.size();
        // Rising prefix gradient toward the optimum at 10.
        const double speedup = last ? 10.0 : 2.0 + 6.0 * (static_cast<double>(d + 1) / length);
        doc[key] = {{"v_test", 1.0}, {"speedup", speedup}};
    }
    // Decoys: single-method paths capped at 6.
    for (int d = 0; d < 3; ++d) {
        const int node = static_cast<int>(rng() % node_count);
        const double speedup = 2.0 + static_cast<double>(rng() % 5);  // 2..6
        if (doc.find(names[node]) == doc.end())
            doc[names[node]] = {{"v_test", 1.0}, {"speedup", speedup}};
    }
    out.landscape_json = doc.dump(2) + "\n";
    out.graph_json = graph_json_from_edges(names, edges);
    return out;
}

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("rg-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace regraph::testing
