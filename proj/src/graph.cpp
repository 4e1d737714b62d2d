#include "regraph/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace regraph {

namespace {

constexpr int kGraphFormatVersion = 1;

bool is_token_char(char c) {
    unsigned char uc = static_cast<unsigned char>(c);
    return std::isalnum(uc) || c == '_';
}

std::set<std::string> code_tokens(std::string_view text) {
    std::set<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_token_char(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            tokens.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.insert(std::move(cur));
    return tokens;
}

}  // namespace

double token_overlap_similarity(std::string_view a, std::string_view b) {
    std::set<std::string> ta = code_tokens(a);
    std::set<std::string> tb = code_tokens(b);
    if (ta.empty() && tb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : ta) inter += tb.count(t);
    std::size_t uni = ta.size() + tb.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

ReGraph::ReGraph() {
    nodes_.insert(MethodId::init());
}

void ReGraph::merge_trajectory(const Trajectory& t, const MergeOptions& opt) {
    if (t.steps.empty()) throw std::invalid_argument("trajectory has no steps");
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const TrajectoryStep& s = t.steps[i];
        if (s.method.is_init())
            throw std::invalid_argument("step " + std::to_string(i) +
                                        ": method name collides with the reserved initial state");
        if (s.method.name.empty())
            throw std::invalid_argument("step " + std::to_string(i) + ": empty method name");
        if (s.example.original_code.empty() || s.example.optimized_code.empty())
            throw std::invalid_argument("step " + std::to_string(i) + ": empty code in example");
        if (i + 1 < t.steps.size() &&
            s.example.optimized_code != t.steps[i + 1].example.original_code)
            throw std::invalid_argument("step " + std::to_string(i + 1) +
                                        ": original code does not chain from previous step");
    }

    MethodId state = MethodId::init();
    for (const TrajectoryStep& s : t.steps) {
        const MethodId& v = s.method;
        nodes_.insert(v);
        registry_.insert(v);
        out_[state].insert(v);
        std::vector<OptimizationExample>& examples = edges_[{state, v}];
        examples.push_back(s.example);
        if (opt.example_cap != 0 && examples.size() > opt.example_cap) {
            examples.erase(examples.begin());
            ++evicted_;
        }
        state = v;
    }
}

std::vector<std::pair<MethodId, std::size_t>> ReGraph::successors(const MethodId& v) const {
    std::vector<std::pair<MethodId, std::size_t>> result;
    auto it = out_.find(v);
    if (it == out_.end()) return result;
    result.reserve(it->second.size());
    for (const MethodId& dst : it->second)
        result.emplace_back(dst, edges_.at({v, dst}).size());
    return result;
}

const std::vector<OptimizationExample>& ReGraph::edge_examples(const MethodId& src,
                                                               const MethodId& dst) const {
    auto it = edges_.find({src, dst});
    if (it == edges_.end())
        throw std::out_of_range("no edge " + src.name + " -> " + dst.name);
    return it->second;
}

const OptimizationExample& ReGraph::pick_edge_example(const MethodId& src, const MethodId& dst,
                                                      std::string_view query_code) const {
    const std::vector<OptimizationExample>& examples = edge_examples(src, dst);
    const OptimizationExample* best = &examples.front();
    double best_score = token_overlap_similarity(examples.front().original_code, query_code);
    for (std::size_t i = 1; i < examples.size(); ++i) {
        double score = token_overlap_similarity(examples[i].original_code, query_code);
        if (score > best_score) {
            best_score = score;
            best = &examples[i];
        }
    }
    return *best;
}

GraphStats ReGraph::stats() const {
    GraphStats s;
    s.node_count = nodes_.size();
    s.method_node_count = registry_.size();
    s.edge_count = edges_.size();
    for (const auto& [key, examples] : edges_) s.example_count += examples.size();
    for (const auto& [node, dsts] : out_)
        s.max_out_degree = std::max(s.max_out_degree, dsts.size());
    s.evicted_examples = evicted_;
    return s;
}

bool equal_modulo_example_order(const ReGraph& a, const ReGraph& b) {
    if (a.nodes() != b.nodes()) return false;
    const auto& ea = a.edges();
    const auto& eb = b.edges();
    if (ea.size() != eb.size()) return false;
    auto sort_key = [](const OptimizationExample& e) {
        return std::tie(e.original_code, e.optimized_code, e.reasoning, e.detail,
                        e.source_task_id);
    };
    for (const auto& [key, examples] : ea) {
        auto it = eb.find(key);
        if (it == eb.end() || it->second.size() != examples.size()) return false;
        std::vector<OptimizationExample> sa = examples;
        std::vector<OptimizationExample> sb = it->second;
        auto cmp = [&](const OptimizationExample& x, const OptimizationExample& y) {
            return sort_key(x) < sort_key(y);
        };
        std::sort(sa.begin(), sa.end(), cmp);
        std::sort(sb.begin(), sb.end(), cmp);
        if (sa != sb) return false;
    }
    return true;
}

std::string graph_to_json(const ReGraph& g) {
    nlohmann::json doc;
    doc["version"] = kGraphFormatVersion;
    doc["init"] = kInitId;
    nlohmann::json nodes = nlohmann::json::array();
    for (const MethodId& v : g.nodes()) nodes.push_back({{"id", v.name}});
    doc["nodes"] = std::move(nodes);
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [key, examples] : g.edges()) {
        nlohmann::json ex_list = nlohmann::json::array();
        for (const OptimizationExample& e : examples) {
            ex_list.push_back({{"original", e.original_code},
                               {"optimized", e.optimized_code},
                               {"reasoning", e.reasoning},
                               {"detail", e.detail},
                               {"task", e.source_task_id}});
        }
        edges.push_back(
            {{"src", key.first.name}, {"dst", key.second.name}, {"examples", std::move(ex_list)}});
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& obj, const char* name,
                                    const char* where) {
    auto it = obj.find(name);
    if (it == obj.end())
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           std::string("missing field '") + name + "' in " + where);
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* name, const char* where) {
    const nlohmann::json& v = require_field(obj, name, where);
    if (!v.is_string())
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           std::string("field '") + name + "' in " + where + " must be a string");
    return v.get<std::string>();
}

}  // namespace

ReGraph graph_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           std::string("graph file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw GraphIoError(GraphIoError::Kind::schema_violation, "graph file root must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        if (key != "version" && key != "init" && key != "nodes" && key != "edges")
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "unknown top-level key '" + key + "'");
    }
    const nlohmann::json& version = require_field(doc, "version", "graph file");
    if (!version.is_number_integer() || version.get<int>() != kGraphFormatVersion)
        throw GraphIoError(GraphIoError::Kind::version_mismatch,
                           "unsupported graph format version: expected " +
                               std::to_string(kGraphFormatVersion) + ", got " + version.dump());
    if (require_string(doc, "init", "graph file") != kInitId)
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           std::string("init must be '") + kInitId + "'");

    const nlohmann::json& nodes = require_field(doc, "nodes", "graph file");
    const nlohmann::json& edges = require_field(doc, "edges", "graph file");
    if (!nodes.is_array() || !edges.is_array())
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           "'nodes' and 'edges' must be arrays");

    std::set<std::string> node_ids;
    for (const nlohmann::json& n : nodes) {
        if (!n.is_object())
            throw GraphIoError(GraphIoError::Kind::schema_violation, "node entry must be an object");
        std::string id = require_string(n, "id", "node entry");
        if (id.empty())
            throw GraphIoError(GraphIoError::Kind::schema_violation, "node id must be non-empty");
        if (id != kInitId && id != canonical_method_name(id))
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "node id '" + id + "' is not in canonical form");
        if (!node_ids.insert(id).second)
            throw GraphIoError(GraphIoError::Kind::duplicate_node, "duplicate node id '" + id + "'");
    }
    if (node_ids.count(kInitId) == 0)
        throw GraphIoError(GraphIoError::Kind::schema_violation,
                           std::string("nodes must include the initial state '") + kInitId + "'");

    ReGraph g;
    std::vector<ReGraph::RestoredEdge> recs;
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const nlohmann::json& e : edges) {
        if (!e.is_object())
            throw GraphIoError(GraphIoError::Kind::schema_violation, "edge entry must be an object");
        ReGraph::RestoredEdge rec;
        rec.src = require_string(e, "src", "edge entry");
        rec.dst = require_string(e, "dst", "edge entry");
        if (node_ids.count(rec.src) == 0 || node_ids.count(rec.dst) == 0)
            throw GraphIoError(GraphIoError::Kind::dangling_endpoint,
                               "edge " + rec.src + " -> " + rec.dst +
                                   " references a node not in 'nodes'");
        if (rec.dst == kInitId)
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "edges may not target the initial state");
        if (!seen_pairs.insert({rec.src, rec.dst}).second)
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "duplicate edge " + rec.src + " -> " + rec.dst);
        const nlohmann::json& ex_list = require_field(e, "examples", "edge entry");
        if (!ex_list.is_array() || ex_list.empty())
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "edge " + rec.src + " -> " + rec.dst +
                                   " must carry a non-empty examples array");
        for (const nlohmann::json& ex : ex_list) {
            if (!ex.is_object())
                throw GraphIoError(GraphIoError::Kind::schema_violation,
                                   "example entry must be an object");
            OptimizationExample oe;
            oe.original_code = require_string(ex, "original", "example entry");
            oe.optimized_code = require_string(ex, "optimized", "example entry");
            oe.reasoning = require_string(ex, "reasoning", "example entry");
            oe.detail = require_string(ex, "detail", "example entry");
            oe.source_task_id = require_string(ex, "task", "example entry");
            rec.examples.push_back(std::move(oe));
        }
        recs.push_back(std::move(rec));
    }
    // Every method node has to be reachable from the initial state.
    std::map<std::string, std::vector<std::string>> adj;
    for (const ReGraph::RestoredEdge& rec : recs) adj[rec.src].push_back(rec.dst);
    std::set<std::string> reached{kInitId};
    std::vector<std::string> frontier{kInitId};
    while (!frontier.empty()) {
        std::string cur = std::move(frontier.back());
        frontier.pop_back();
        for (const std::string& next : adj[cur])
            if (reached.insert(next).second) frontier.push_back(next);
    }
    for (const std::string& id : node_ids)
        if (reached.count(id) == 0)
            throw GraphIoError(GraphIoError::Kind::schema_violation,
                               "node '" + id + "' is unreachable from the initial state");

    g.restore(node_ids, recs);
    return g;
}

void ReGraph::restore(const std::set<std::string>& node_ids,
                      const std::vector<RestoredEdge>& edge_recs) {
    for (const std::string& id : node_ids) {
        MethodId v{id};
        nodes_.insert(v);
        if (!v.is_init()) registry_.insert(v);
    }
    for (const RestoredEdge& rec : edge_recs) {
        MethodId src{rec.src};
        MethodId dst{rec.dst};
        out_[src].insert(dst);
        edges_[{src, dst}] = rec.examples;
    }
}

void save_graph(const ReGraph& g, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw GraphIoError(GraphIoError::Kind::io, "cannot open for writing: " + file.string());
    out << graph_to_json(g);
    if (!out)
        throw GraphIoError(GraphIoError::Kind::io, "write failed: " + file.string());
}

ReGraph load_graph(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw GraphIoError(GraphIoError::Kind::io, "cannot open: " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return graph_from_json(ss.str());
}

}  // namespace regraph
