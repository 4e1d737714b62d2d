#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regraph/dataset.hpp"
#include "regraph/graph.hpp"
#include "regraph/log.hpp"
#include "regraph/process.hpp"
#include "regraph/prompts.hpp"
#include "regraph/trajectory.hpp"
#include "support.hpp"

using namespace regraph;
using regraph::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunResult cli(std::vector<std::string> args, double timeout_s = 120.0) {
    RunSpec spec;
    spec.argv.push_back(REGRAPH_BIN);
    for (auto& a : args) spec.argv.push_back(std::move(a));
    spec.timeout_s = timeout_s;
    return run_process(spec);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TaskRecord make_task(std::string id, std::string src) {
    TaskRecord t;
    t.id = std::move(id);
    t.cpp_source = std::move(src);
    t.tests = {TestInput{"1\n", ComparePolicy::exact}};
    return t;
}

std::string step_list_reply(const std::vector<ParsedStep>& steps) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ParsedStep& s : steps)
        arr.push_back({{"think", s.think},
                       {"method", s.method},
                       {"detail", s.detail},
                       {"code", s.code}});
    return arr.dump();
}

std::string relabel_reply(const std::vector<std::pair<std::string, std::string>>& items) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [existed, method] : items)
        arr.push_back({{"existed", existed}, {"method", method}});
    return arr.dump();
}

// Mirrors what cmd_build-graph renders so fixtures land on the right keys:
// default model and token budget, acquisition at 0.7, relabeling at 0.0.
void store_acquire(const fs::path& dir, const TaskRecord& task, const std::string& reply) {
    TrajectoryConfig cfg;
    ChatRequest req = render(prompt_template(PromptKind::reasoning),
                             {{"kernel", task.cpp_source}}, cfg.acquire);
    ScriptedBackend::store_fixture(dir, req, reply);
}

void store_relabel(const fs::path& dir, const std::vector<ParsedStep>& steps,
                   const std::vector<std::string>& registry_names, const std::string& reply) {
    TrajectoryConfig cfg;
    nlohmann::json methods = nlohmann::json::array();
    for (const std::string& m : registry_names) methods.push_back(m);
    nlohmann::json process = nlohmann::json::array();
    for (const ParsedStep& s : steps)
        process.push_back({{"think", s.think},
                           {"method", s.method},
                           {"detail", s.detail},
                           {"code", s.code}});
    ChatRequest req = render(prompt_template(PromptKind::relabel),
                             {{"methods", methods}, {"process", process}}, cfg.relabel);
    ScriptedBackend::store_fixture(dir, req, reply);
}

// Two tasks whose scripted replies merge into a 4-node, 3-edge graph.
struct BuildSetup {
    TempDir root;
    fs::path fixtures = root.path() / "fixtures";
    fs::path dataset = root.path() / "tasks.jsonl";
    fs::path landscape = root.path() / "landscape.json";

    BuildSetup() {
        fs::create_directories(fixtures);
        TaskRecord t1 = make_task("t1", "int main() { return 1; }");
        TaskRecord t2 = make_task("t2", "int main() { return 2; }");
        save_dataset({t1, t2}, dataset);

        std::vector<ParsedStep> t1_steps = {{"unroll", "Loop Unrolling", "by 4", "a1"},
                                            {"vectorize", "SIMD Vectorization", "avx2", "b1"}};
        std::vector<ParsedStep> t2_steps = {{"unroll", "Loop Unrolling", "by 8", "a2"},
                                            {"tile", "Cache Tiling", "64x64", "g2"}};
        store_acquire(fixtures, t1, step_list_reply(t1_steps));
        store_acquire(fixtures, t2, step_list_reply(t2_steps));
        store_relabel(fixtures, t1_steps, {},
                      relabel_reply({{"no", "Loop Unrolling"}, {"no", "SIMD Vectorization"}}));
        store_relabel(fixtures, t2_steps, {"loop unrolling", "simd vectorization"},
                      relabel_reply({{"yes", "Loop Unrolling"}, {"no", "Cache Tiling"}}));

        std::ofstream(landscape) << R"({"default": {"v_test": 1.0, "speedup": 2.0}})";
    }

    std::vector<std::string> base_flags() const {
        return {"--dataset", dataset.string(),      "--fixtures",           fixtures.string(),
                "--verifier.kind", "oracle",        "--verifier.landscape", landscape.string()};
    }
};

ReGraph chain_graph() {
    ReGraph g;
    Trajectory t;
    t.task_id = "seed";
    std::string prev = "orig";
    for (const char* name : {"a", "b"}) {
        TrajectoryStep step;
        step.method = MethodId::from_raw(name);
        step.example.original_code = prev;
        step.example.optimized_code = std::string("code-") + name;
        step.example.source_task_id = "seed";
        prev = step.example.optimized_code;
        t.steps.push_back(std::move(step));
    }
    g.merge_trajectory(t);
    return g;
}

}  // namespace

TEST_CASE("build-graph writes a graph and a report, reproducibly") {
    BuildSetup setup;
    fs::path graph_file = setup.root.path() / "graph.json";
    fs::path report_file = setup.root.path() / "build_report.json";

    std::vector<std::string> args = {"build-graph", "--graph", graph_file.string(), "--out",
                                     report_file.string()};
    for (auto& f : setup.base_flags()) args.push_back(f);

    RunResult run1 = cli(args);
    CAPTURE(run1.err);
    REQUIRE(run1.exit_code == 0);
    CHECK(run1.out.find("merged=2 skipped=0 nodes=4 edges=3 examples=4") != std::string::npos);

    ReGraph graph = load_graph(graph_file);
    CHECK(graph.stats().method_node_count == 3);
    CHECK(graph.has_edge(MethodId::from_raw("loop unrolling"),
                         MethodId::from_raw("cache tiling")));

    nlohmann::json report = nlohmann::json::parse(slurp(report_file));
    CHECK(report["merged"] == 2);
    CHECK(report["skipped"] == 0);
    CHECK(report["tasks"].size() == 2);
    CHECK(report["tasks"][0]["task_id"] == "t1");
    CHECK(report["tasks"][0]["status"] == "merged");
    CHECK(report["trajectory_length_histogram"]["2"] == 2);
    CHECK(report["graph"]["edges"] == 3);
    // The effective configuration is embedded for provenance.
    CHECK(report["config"]["verifier"]["kind"] == "oracle");

    SUBCASE("a second identical run produces identical bytes") {
        std::string graph_bytes = slurp(graph_file);
        std::string report_bytes = slurp(report_file);
        RunResult run2 = cli(args);
        REQUIRE(run2.exit_code == 0);
        CHECK(slurp(graph_file) == graph_bytes);
        CHECK(slurp(report_file) == report_bytes);
    }
}

TEST_CASE("build-graph with nothing merged reports an empty graph") {
    BuildSetup setup;
    fs::path empty_fixtures = setup.root.path() / "empty";
    fs::create_directories(empty_fixtures);
    fs::path graph_file = setup.root.path() / "graph.json";

    RunResult run = cli({"build-graph", "--dataset", setup.dataset.string(), "--fixtures",
                         empty_fixtures.string(), "--verifier.kind", "oracle",
                         "--verifier.landscape", setup.landscape.string(), "--graph",
                         graph_file.string()});
    CHECK(run.exit_code == 3);
    CHECK(run.out.find("merged=0") != std::string::npos);
    // The graph and report still exist for inspection.
    CHECK(fs::exists(graph_file));
    CHECK(fs::exists(setup.root.path() / "graph.json.report.json"));
}

TEST_CASE("graph-stats prints the size counters") {
    TempDir dir;
    fs::path graph_file = dir.path() / "graph.json";
    save_graph(chain_graph(), graph_file);

    RunResult run = cli({"graph-stats", "--graph", graph_file.string()});
    REQUIRE(run.exit_code == 0);
    CHECK(run.out == "nodes=3 edges=2 examples=2 method_nodes=2 max_out_degree=1 "
                     "evicted_examples=0\n");
}

TEST_CASE("optimize searches a graph and writes the result bundle") {
    TempDir dir;
    fs::path graph_file = dir.path() / "graph.json";
    save_graph(chain_graph(), graph_file);

    fs::path task_file = dir.path() / "task.json";
    std::ofstream(task_file) << task_record_to_json_line(make_task("t9", "S"));

    fs::path landscape_file = dir.path() / "landscape.json";
    std::ofstream(landscape_file) << R"({
        "default": {"v_test": 0.0, "speedup": 0.0},
        "OPT1": {"v_test": 1.0, "speedup": 4.0}
    })";

    // Budget 1 makes exactly one optimizer call: applying "a" to the initial
    // code with the single example on the init->a edge.
    fs::path fixtures = dir.path() / "fixtures";
    fs::create_directories(fixtures);
    RequestDefaults defaults;  // model local, temperature 0, default tokens
    ChatRequest req = render(prompt_template(PromptKind::regrapht),
                             {{"source_code", "S"},
                              {"example.origin", "orig"},
                              {"example.optimized", "code-a"},
                              {"example.method", "a"}},
                             defaults);
    ScriptedBackend::store_fixture(fixtures, req,
                                   R"({"suitable": "yes", "optimization": "OPT1"})");

    fs::path out_dir = dir.path() / "out";
    std::vector<std::string> args = {"optimize",
                                     "--graph",
                                     graph_file.string(),
                                     "--task",
                                     task_file.string(),
                                     "--fixtures",
                                     fixtures.string(),
                                     "--verifier.kind",
                                     "oracle",
                                     "--verifier.landscape",
                                     landscape_file.string(),
                                     "--out",
                                     out_dir.string(),
                                     "--budget",
                                     "1"};

    RunResult run = cli(args);
    CAPTURE(run.err);
    REQUIRE(run.exit_code == 0);
    CHECK(run.out.find("best_reward=4") != std::string::npos);

    nlohmann::json result = nlohmann::json::parse(slurp(out_dir / "result.json"));
    CHECK(result["task_id"] == "t9");
    CHECK(result["method"] == "mcgs");
    CHECK(result["best_reward"].get<double>() == doctest::Approx(4.0));
    CHECK(result["best_code"] == "OPT1");
    CHECK(result["trajectory"] == nlohmann::json::array({"a"}));
    CHECK(result["budget_used"] == 1);
    CHECK(result["iterations"].is_array());
    CHECK(result["config"]["search"]["budget"] == 1);
    CHECK(slurp(out_dir / "best_code.cpp") == "OPT1");

    SUBCASE("the same search is byte-reproducible") {
        std::string bytes = slurp(out_dir / "result.json");
        RunResult rerun = cli(args);
        REQUIRE(rerun.exit_code == 0);
        CHECK(slurp(out_dir / "result.json") == bytes);
    }

    SUBCASE("--baseline switches to the traversal search") {
        args.push_back("--baseline");
        RunResult rerun = cli(args);
        REQUIRE(rerun.exit_code == 0);
        nlohmann::json base = nlohmann::json::parse(slurp(out_dir / "result.json"));
        CHECK(base["method"] == "traversal");
        CHECK(base["best_code"] == "OPT1");
        CHECK(base["budget_used"] == 1);
    }
}

TEST_CASE("evaluate scores a dataset and writes both report forms") {
    TempDir dir;
    TaskRecord task = make_task("t1", "int main() { return 7; }");
    fs::path dataset = dir.path() / "tasks.jsonl";
    save_dataset({task}, dataset);

    fs::path fixtures = dir.path() / "fixtures";
    fs::create_directories(fixtures);
    RequestDefaults defaults;
    defaults.temperature = 0.7;  // evaluation samples at acquisition temperature
    ChatRequest req = render(prompt_template(PromptKind::standard),
                             {{"kernel", task.cpp_source}}, defaults);
    ScriptedBackend::store_fixture(fixtures, req,
                                   R"({"think": "t", "code": "OPT-E"})");

    fs::path landscape_file = dir.path() / "landscape.json";
    std::ofstream(landscape_file) << R"({
        "default": {"v_test": 0.0, "speedup": 0.0},
        "OPT-E": {"v_test": 1.0, "speedup": 3.0}
    })";

    fs::path out_dir = dir.path() / "out";
    RunResult run = cli({"evaluate", "--method", "standard", "--dataset", dataset.string(),
                         "--fixtures", fixtures.string(), "--verifier.kind", "oracle",
                         "--verifier.landscape", landscape_file.string(), "--out",
                         out_dir.string()});
    CAPTURE(run.err);
    REQUIRE(run.exit_code == 0);
    CHECK(run.out.find("method=standard samples=1 k=1") != std::string::npos);
    CHECK(run.out.find("overall") != std::string::npos);

    nlohmann::json report = nlohmann::json::parse(slurp(out_dir / "report.json"));
    CHECK(report["overall"]["pass@1"].get<double>() == doctest::Approx(1.0));
    CHECK(report["overall"]["speedup@1"].get<double>() == doctest::Approx(3.0));
    CHECK(report["config"]["gateway"]["backend"] == "scripted");
    CHECK(slurp(out_dir / "report.txt") == run.out);

    SUBCASE("the rag stub is a configuration error") {
        RunResult rag = cli({"evaluate", "--method", "rag", "--dataset", dataset.string(),
                             "--fixtures", fixtures.string(), "--out", out_dir.string()});
        CHECK(rag.exit_code == 2);
        CHECK(rag.err.find("rag") != std::string::npos);
    }
}

TEST_CASE("curate filters a corpus directory and emits a dataset") {
    TempDir dir;
    fs::path corpus = dir.path() / "corpus";
    fs::create_directories(corpus);

    auto body = [](int lines, const std::string& banner) {
        std::string src = banner + "#include <vector>\n\nvoid kernel(std::vector<int>& v) {\n";
        for (int i = 0; i < lines; ++i)
            src += "    v[" + std::to_string(i) + "] = " + std::to_string(i) + ";\n";
        return src + "}\n";
    };

    std::string ok_content = body(60, "// corpus: ok\n");
    std::ofstream(corpus / "a_ok.cu") << ok_content;
    std::ofstream(corpus / "b_local.cu") << body(60, "#include \"helpers.h\"\n");

    fs::path fixtures = dir.path() / "fixtures";
    fs::create_directories(fixtures);
    RequestDefaults defaults;  // curation prompts run at temperature 0
    auto store = [&](PromptKind kind, const std::string& field, const std::string& value,
                     const std::string& reply) {
        ScriptedBackend::store_fixture(
            fixtures, render(prompt_template(kind), {{field, value}}, defaults), reply);
    };
    store(PromptKind::kernel_extract, "file", ok_content,
          R"({"kernels": [{"name": "k", "content": "raw"}]})");
    store(PromptKind::dependency, "kernel", "raw",
          R"({"success": "yes", "reason": "", "rewrite": "fixed"})");
    store(PromptKind::serial_gen, "kernel", "fixed",
          R"({"serial": "int main() { return 0; }", "driver": "// driver",)"
          R"( "test_inputs": ["1\n"]})");

    fs::path landscape_file = dir.path() / "landscape.json";
    std::ofstream(landscape_file) << R"({
        "default": {"v_test": 0.0, "speedup": 0.0},
        "fixed": {"v_test": 1.0, "speedup": 2.0}
    })";

    fs::path out_dir = dir.path() / "out";
    std::vector<std::string> args = {"curate",         "--in-dir",
                                     corpus.string(),  "--fixtures",
                                     fixtures.string(), "--verifier.kind",
                                     "oracle",          "--verifier.landscape",
                                     landscape_file.string(), "--out",
                                     out_dir.string()};

    RunResult run = cli(args);
    CAPTURE(run.err);
    REQUIRE(run.exit_code == 0);
    CHECK(run.out.find("accepted=1 rejected=1 errored=0") != std::string::npos);

    std::vector<TaskRecord> accepted = load_dataset(out_dir / "dataset.jsonl");
    REQUIRE(accepted.size() == 1);
    CHECK(accepted[0].id == "a_ok.cu");
    CHECK(accepted[0].cpp_source == "int main() { return 0; }\n// driver");

    nlohmann::json report = nlohmann::json::parse(slurp(out_dir / "report.json"));
    REQUIRE(report["items"].size() == 2);
    CHECK(report["items"][0]["id"] == "a_ok.cu");
    CHECK(report["items"][0]["status"] == "accepted");
    CHECK(report["items"][1]["status"] == "rejected_local_header");

    SUBCASE("a backend failure turns into a partial-run exit") {
        std::ofstream(corpus / "c_unscripted.cu") << body(60, "// corpus: unscripted\n");
        RunResult partial = cli(args);
        CHECK(partial.exit_code == 4);
        CHECK(partial.out.find("errored=1") != std::string::npos);
    }

    SUBCASE("rule flags reach the filter") {
        RunResult strict = cli({"curate", "--in-dir", corpus.string(), "--fixtures",
                                fixtures.string(), "--out", out_dir.string(), "--min-lines",
                                "100"});
        REQUIRE(strict.exit_code == 0);
        CHECK(strict.out.find("accepted=0") != std::string::npos);

        std::ofstream(corpus / "d_thrust.cu") << body(60, "// uses thrust::sort\n");
        RunResult denied = cli({"curate", "--in-dir", corpus.string(), "--fixtures",
                                fixtures.string(), "--verifier.kind", "oracle",
                                "--verifier.landscape", landscape_file.string(), "--out",
                                out_dir.string(), "--denylist", "thrust"});
        REQUIRE(denied.exit_code == 0);
        nlohmann::json denied_report = nlohmann::json::parse(slurp(out_dir / "report.json"));
        bool found = false;
        for (const auto& item : denied_report["items"])
            if (item["id"] == "d_thrust.cu") {
                found = true;
                CHECK(item["status"] == "rejected_third_party");
            }
        CHECK(found);
    }
}

TEST_CASE("configuration problems exit with the config code and name the field") {
    TempDir dir;

    SUBCASE("build-graph without a dataset") {
        RunResult run = cli({"build-graph", "--graph", (dir.path() / "g.json").string(),
                             "--fixtures", dir.path().string()});
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("paths.dataset") != std::string::npos);
    }

    SUBCASE("build-graph with a missing dataset file") {
        RunResult run = cli({"build-graph", "--graph", (dir.path() / "g.json").string(),
                             "--fixtures", dir.path().string(), "--dataset",
                             (dir.path() / "absent.jsonl").string()});
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("cannot open dataset") != std::string::npos);
    }

    SUBCASE("graph-stats on a missing graph") {
        RunResult run = cli({"graph-stats", "--graph", (dir.path() / "no.json").string()});
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("graph error") != std::string::npos);
    }

    SUBCASE("optimize without a task") {
        fs::path graph_file = dir.path() / "g.json";
        save_graph(chain_graph(), graph_file);
        RunResult run = cli({"optimize", "--graph", graph_file.string(), "--out",
                             (dir.path() / "out").string(), "--fixtures", dir.path().string()});
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("task") != std::string::npos);
    }

    SUBCASE("bad flag value") {
        RunResult run = cli({"graph-stats", "--graph", "g.json", "--search.budget", "soon"});
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("search.budget") != std::string::npos);
    }

    SUBCASE("config file feeds every command, flags win") {
        fs::path graph_file = dir.path() / "g.json";
        save_graph(chain_graph(), graph_file);
        fs::path ini = dir.path() / "app.ini";
        std::ofstream(ini) << "[paths]\ngraph = " << (dir.path() / "missing.json").string()
                           << "\n";
        // The file alone points at a missing graph; the flag override wins.
        RunResult run = cli({"graph-stats", "--config", ini.string(), "--graph",
                             graph_file.string()});
        CHECK(run.exit_code == 0);
        CHECK(run.out.find("nodes=3") != std::string::npos);
    }
}

TEST_CASE("argument parsing failures come from the option parser") {
    RunResult unknown = cli({"transmogrify"});
    CHECK(unknown.exit_code != 0);

    RunResult missing = cli({"evaluate"});  // --method is required
    CHECK(missing.exit_code != 0);
    CHECK(missing.err.find("--method") != std::string::npos);

    RunResult help = cli({"--help"});
    CHECK(help.exit_code == 0);
    for (const char* cmd : {"build-graph", "graph-stats", "optimize", "evaluate", "curate"})
        CHECK(help.out.find(cmd) != std::string::npos);
}

TEST_CASE("logger writes leveled lines to its sink") {
    std::ostringstream sink;
    Logger log(LogLevel::info, &sink);
    log.debug("hidden");
    log.info("shown", {{"key", "value"}});
    log.warn("louder");
    std::string text = sink.str();
    CHECK(text.find("hidden") == std::string::npos);
    CHECK(text.find("shown") != std::string::npos);
    CHECK(text.find("key") != std::string::npos);
    CHECK(text.find("louder") != std::string::npos);

    std::ostringstream debug_sink;
    Logger debug_log(LogLevel::debug, &debug_sink);
    debug_log.debug("traced", {{"a", "1"}});
    // At the debug threshold every line is machine-readable JSON.
    std::istringstream lines(debug_sink.str());
    std::string line;
    while (std::getline(lines, line)) {
        CAPTURE(line);
        CHECK_FALSE(nlohmann::json::parse(line, nullptr, false).is_discarded());
    }

    CHECK_THROWS_AS(log_level_from_string("verbose"), std::invalid_argument);
    CHECK(log_level_from_string("warn") == LogLevel::warn);
}
