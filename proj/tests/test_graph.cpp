#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "regraph/canon.hpp"
#include "regraph/graph.hpp"
#include "support.hpp"

using namespace regraph;
using namespace regraph::testing;

namespace {

TrajectoryStep step(const std::string& method, const std::string& from, const std::string& to) {
    TrajectoryStep s;
    s.method = MethodId::from_raw(method);
    s.example.original_code = from;
    s.example.optimized_code = to;
    s.example.reasoning = "why";
    s.example.detail = "how";
    s.example.source_task_id = "t";
    return s;
}

Trajectory chain(const std::string& id, const std::vector<std::string>& methods) {
    Trajectory t;
    t.task_id = id;
    std::string code = "c0";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        std::string next = "c" + std::to_string(i + 1) + "-" + id;
        t.steps.push_back(step(methods[i], code, next));
        t.steps.back().example.source_task_id = id;
        code = next;
    }
    return t;
}

}  // namespace

TEST_CASE("canonical method names fold case and whitespace") {
    CHECK(canonical_method_name("  Shared Memory ") == "shared memory");
    CHECK(canonical_method_name("LOOP\tUnrolling") == "loop unrolling");
    CHECK(canonical_method_name("a  b\n c") == "a b c");
    CHECK(canonical_method_name("already canonical") == "already canonical");
    CHECK(canonical_method_name("") == "");
    CHECK(MethodId::from_raw("Kernel  Fusion").name == "kernel fusion");
    CHECK(MethodId::init().is_init());
    CHECK_FALSE(MethodId::from_raw("fusion").is_init());
}

TEST_CASE("merging two trajectories produces the documented counts") {
    ReGraph g;
    g.merge_trajectory(chain("t1", {"a", "b"}));
    g.merge_trajectory(chain("t2", {"a", "c"}));
    const GraphStats s = g.stats();
    CHECK(s.node_count == 4);
    CHECK(s.method_node_count == 3);
    CHECK(s.edge_count == 3);
    CHECK(s.example_count == 4);
    CHECK(g.has_edge(MethodId::init(), MethodId::from_raw("a")));
    CHECK(g.edge_examples(MethodId::init(), MethodId::from_raw("a")).size() == 2);
    CHECK(g.has_edge(MethodId::from_raw("a"), MethodId::from_raw("b")));
    CHECK(g.has_edge(MethodId::from_raw("a"), MethodId::from_raw("c")));
    CHECK(g.registry().size() == 3);
    CHECK(g.registry().count(MethodId::init()) == 0);

    const auto succ = g.successors(MethodId::from_raw("a"));
    REQUIRE(succ.size() == 2);
    CHECK(succ[0].first.name == "b");  // lexicographic order
    CHECK(succ[1].first.name == "c");
}

TEST_CASE("merge validates before mutating") {
    ReGraph g;
    g.merge_trajectory(chain("ok", {"a"}));
    const GraphStats before = g.stats();

    Trajectory broken = chain("bad", {"x", "y"});
    broken.steps[1].example.original_code = "not-the-previous-optimized";
    CHECK_THROWS_AS(g.merge_trajectory(broken), std::invalid_argument);

    Trajectory reserved = chain("bad2", {"__init__"});
    CHECK_THROWS_AS(g.merge_trajectory(reserved), std::invalid_argument);

    Trajectory unnamed = chain("bad3", {"   "});
    CHECK_THROWS_AS(g.merge_trajectory(unnamed), std::invalid_argument);

    Trajectory empty_code = chain("bad4", {"a"});
    empty_code.steps[0].example.optimized_code = "";
    CHECK_THROWS_AS(g.merge_trajectory(empty_code), std::invalid_argument);

    const GraphStats after = g.stats();
    CHECK(after.node_count == before.node_count);
    CHECK(after.edge_count == before.edge_count);
    CHECK(after.example_count == before.example_count);
}

TEST_CASE("cycles and self-loops merge fine") {
    ReGraph g;
    g.merge_trajectory(chain("t", {"a", "a", "b", "a"}));
    CHECK(g.has_edge(MethodId::from_raw("a"), MethodId::from_raw("a")));
    CHECK(g.has_edge(MethodId::from_raw("b"), MethodId::from_raw("a")));
    CHECK(g.stats().node_count == 3);
    // Edges: init->a, a->a, a->b, b->a.
    CHECK(g.stats().edge_count == 4);
}

TEST_CASE("per-edge example cap evicts oldest first") {
    ReGraph g;
    MergeOptions cap2;
    cap2.example_cap = 2;
    g.merge_trajectory(chain("t1", {"a"}), cap2);
    g.merge_trajectory(chain("t2", {"a"}), cap2);
    g.merge_trajectory(chain("t3", {"a"}), cap2);
    const auto& ex = g.edge_examples(MethodId::init(), MethodId::from_raw("a"));
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].source_task_id == "t2");
    CHECK(ex[1].source_task_id == "t3");
    CHECK(g.stats().evicted_examples == 1);
}

TEST_CASE("token overlap similarity is Jaccard over identifier tokens") {
    CHECK(token_overlap_similarity("int a", "int a") == doctest::Approx(1.0));
    CHECK(token_overlap_similarity("int a", "int b") == doctest::Approx(1.0 / 3.0));
    CHECK(token_overlap_similarity("", "") == doctest::Approx(1.0));
    CHECK(token_overlap_similarity("", "x") == doctest::Approx(0.0));
    // Punctuation is not a token.
    CHECK(token_overlap_similarity("a;b", "a b") == doctest::Approx(1.0));
}

TEST_CASE("pick_edge_example prefers the closest original, earliest on ties") {
    ReGraph g;
    Trajectory t1 = chain("t1", {"a"});
    t1.steps[0].example.original_code = "alpha beta gamma";
    Trajectory t2 = chain("t2", {"a"});
    t2.steps[0].example.original_code = "alpha delta";
    g.merge_trajectory(t1);
    g.merge_trajectory(t2);

    const auto& close =
        g.pick_edge_example(MethodId::init(), MethodId::from_raw("a"), "alpha beta gamma zeta");
    CHECK(close.source_task_id == "t1");

    // Query equally far from both: the earlier example wins.
    const auto& tie = g.pick_edge_example(MethodId::init(), MethodId::from_raw("a"), "unrelated");
    CHECK(tie.source_task_id == "t1");
}

TEST_CASE("serialization round-trips and is byte-stable") {
    ReGraph g;
    g.merge_trajectory(chain("t1", {"a", "b"}));
    g.merge_trajectory(chain("t2", {"a", "c", "a"}));

    const std::string text = graph_to_json(g);
    CHECK(text == graph_to_json(g));
    const ReGraph back = graph_from_json(text);
    CHECK(back == g);
    CHECK(graph_to_json(back) == text);

    TempDir dir;
    const auto file = dir.path() / "g.json";
    save_graph(g, file);
    CHECK(load_graph(file) == g);
}

TEST_CASE("loader rejects malformed graph files") {
    ReGraph g;
    g.merge_trajectory(chain("t", {"a", "b"}));
    const std::string good = graph_to_json(g);

    auto expect_kind = [](const std::string& text, GraphIoError::Kind kind) {
        try {
            graph_from_json(text);
            FAIL_CHECK("expected rejection: " << text.substr(0, 80));
        } catch (const GraphIoError& e) {
            CHECK(e.kind() == kind);
        }
    };

    SUBCASE("version mismatch") {
        std::string t = good;
        const auto pos = t.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        t.replace(pos, 12, "\"version\": 9");
        expect_kind(t, GraphIoError::Kind::version_mismatch);
    }
    SUBCASE("unknown top-level key") {
        std::string t = good;
        t.insert(t.find('{') + 1, "\"extra\": 1,");
        expect_kind(t, GraphIoError::Kind::schema_violation);
    }
    SUBCASE("non-canonical node id") {
        std::string t = good;
        const auto pos = t.find("\"a\"");
        REQUIRE(pos != std::string::npos);
        t.replace(pos, 3, "\"A\"");
        // "A" fails canonical-form validation before anything dangles.
        CHECK_THROWS_AS(graph_from_json(t), GraphIoError);
    }
    SUBCASE("edge into the initial state") {
        nlohmann::json doc = nlohmann::json::parse(good);
        nlohmann::json edge = doc["edges"][0];
        edge["src"] = "b";
        edge["dst"] = "__init__";
        doc["edges"].push_back(edge);
        expect_kind(doc.dump(), GraphIoError::Kind::schema_violation);
    }
    SUBCASE("dangling endpoint") {
        nlohmann::json doc = nlohmann::json::parse(good);
        doc["edges"][0]["dst"] = "ghost";
        expect_kind(doc.dump(), GraphIoError::Kind::dangling_endpoint);
    }
    SUBCASE("duplicate node") {
        nlohmann::json doc = nlohmann::json::parse(good);
        doc["nodes"].push_back({{"id", "a"}});
        expect_kind(doc.dump(), GraphIoError::Kind::duplicate_node);
    }
    SUBCASE("empty example list") {
        nlohmann::json doc = nlohmann::json::parse(good);
        doc["edges"][0]["examples"] = nlohmann::json::array();
        expect_kind(doc.dump(), GraphIoError::Kind::schema_violation);
    }
    SUBCASE("unreachable node") {
        nlohmann::json doc = nlohmann::json::parse(good);
        doc["nodes"].push_back({{"id", "stranded"}});
        expect_kind(doc.dump(), GraphIoError::Kind::schema_violation);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_graph("/nonexistent/graph.json"), GraphIoError);
    }
}

TEST_CASE("merge agrees with the naive reference on random corpora") {
    MergeOptions unbounded;
    unbounded.example_cap = 0;
    for (std::uint64_t seed : {7ull, 21ull, 1234ull}) {
        const TrajectoryCorpus corpus = make_random_trajectories(seed, 30, 8, 6);
        ReGraph merged;
        for (const auto& t : corpus.typed) merged.merge_trajectory(t, unbounded);
        const NaiveGraph reference = naive_merge(corpus.plain, "__init__");
        CHECK(graphs_agree(merged, reference));
    }
}

TEST_CASE("equal_modulo_example_order ignores insertion order only") {
    ReGraph g1;
    g1.merge_trajectory(chain("t1", {"a"}));
    g1.merge_trajectory(chain("t2", {"a"}));
    ReGraph g2;
    g2.merge_trajectory(chain("t2", {"a"}));
    g2.merge_trajectory(chain("t1", {"a"}));
    CHECK(equal_modulo_example_order(g1, g2));
    CHECK_FALSE(g1 == g2);

    ReGraph g3;
    g3.merge_trajectory(chain("t1", {"a"}));
    CHECK_FALSE(equal_modulo_example_order(g1, g3));
}
