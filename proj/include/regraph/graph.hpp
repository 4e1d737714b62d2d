#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regraph/canon.hpp"

namespace regraph {

// One optimization instance attached to a graph edge: the code before and
// after applying the edge's target method, with the model's reasoning.
struct OptimizationExample {
    std::string original_code;
    std::string optimized_code;
    std::string reasoning;
    std::string detail;
    std::string source_task_id;

    bool operator==(const OptimizationExample&) const = default;
};

struct TrajectoryStep {
    MethodId method;
    OptimizationExample example;

    bool operator==(const TrajectoryStep&) const = default;
};

// A verified, relabeled optimization trajectory ready to merge.
struct Trajectory {
    std::string task_id;
    std::vector<TrajectoryStep> steps;
};

struct MergeOptions {
    // Per-edge example cap; oldest examples are evicted first. 0 = unbounded.
    std::size_t example_cap = 32;
};

struct GraphStats {
    std::size_t node_count = 0;         // includes the initial state
    std::size_t method_node_count = 0;  // nodes minus the initial state
    std::size_t edge_count = 0;
    std::size_t example_count = 0;
    std::size_t max_out_degree = 0;
    std::size_t evicted_examples = 0;
};

class GraphIoError : public std::runtime_error {
public:
    enum class Kind { version_mismatch, schema_violation, duplicate_node, dangling_endpoint, io };

    GraphIoError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Directed graph of optimization methods. Cycles and self-loops are allowed.
// The reserved initial state is always present and never carries in-edges
// produced by merging (trajectories start there).
class ReGraph {
public:
    using EdgeKey = std::pair<MethodId, MethodId>;

    ReGraph();

    // Folds one trajectory into the graph: walks from the initial state,
    // appending each step's example to the traversed edge and creating nodes
    // and edges on first use. Validates the trajectory up front and leaves the
    // graph untouched on rejection.
    void merge_trajectory(const Trajectory& t, const MergeOptions& opt = {});

    // Out-neighbors in lexicographic order with their edge example counts.
    std::vector<std::pair<MethodId, std::size_t>> successors(const MethodId& v) const;

    bool has_node(const MethodId& v) const { return nodes_.count(v) != 0; }
    bool has_edge(const MethodId& src, const MethodId& dst) const {
        return edges_.count({src, dst}) != 0;
    }

    const std::vector<OptimizationExample>& edge_examples(const MethodId& src,
                                                          const MethodId& dst) const;

    // The edge example whose original code has the highest token-overlap
    // similarity with the query; ties keep the earliest inserted.
    const OptimizationExample& pick_edge_example(const MethodId& src, const MethodId& dst,
                                                 std::string_view query_code) const;

    // Known methods: every node except the initial state.
    const std::set<MethodId>& registry() const { return registry_; }

    const std::set<MethodId>& nodes() const { return nodes_; }
    const std::map<EdgeKey, std::vector<OptimizationExample>>& edges() const { return edges_; }

    GraphStats stats() const;

    bool operator==(const ReGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    struct RestoredEdge {
        std::string src, dst;
        std::vector<OptimizationExample> examples;
    };

    // Deserialization path: bulk-installs already validated nodes and edges.
    void restore(const std::set<std::string>& node_ids,
                 const std::vector<RestoredEdge>& edge_recs);

    friend ReGraph graph_from_json(std::string_view text);

    std::set<MethodId> nodes_;
    std::set<MethodId> registry_;
    std::map<EdgeKey, std::vector<OptimizationExample>> edges_;
    std::map<MethodId, std::set<MethodId>> out_;
    std::size_t evicted_ = 0;
};

// Same structure, ignoring the order of examples within each edge.
bool equal_modulo_example_order(const ReGraph& a, const ReGraph& b);

// Jaccard similarity over identifier/number tokens; both-empty compares as 1.
double token_overlap_similarity(std::string_view a, std::string_view b);

// Versioned JSON persistence. Serialization is canonical: sorted nodes and
// edges, two-space indent, so equal graphs produce identical bytes.
void save_graph(const ReGraph& g, const std::filesystem::path& file);
ReGraph load_graph(const std::filesystem::path& file);

std::string graph_to_json(const ReGraph& g);
ReGraph graph_from_json(std::string_view text);

}  // namespace regraph
