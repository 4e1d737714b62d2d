#include "regraph/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regraph/config.hpp"
#include "regraph/curate.hpp"
#include "regraph/dataset.hpp"
#include "regraph/evaluate.hpp"
#include "regraph/graph.hpp"
#include "regraph/log.hpp"
#include "regraph/search.hpp"
#include "regraph/trajectory.hpp"

namespace fs = std::filesystem;

namespace regraph {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyGraph = 3;
constexpr int kExitPartial = 4;

struct ConfigCapture {
    std::string config_file;
    // Overrides in the order the flags appeared, applied after the file.
    std::vector<std::pair<std::string, std::string>> overrides;
};

// Every config key becomes a flag of the same dotted name; the common ones
// also get the short spellings the commands document.
void add_config_options(CLI::App* cmd, ConfigCapture& cap) {
    cmd->add_option("--config", cap.config_file, "configuration file");
    static const std::map<std::string, std::string> aliases = {
        {"search.budget", "--budget"},
        {"search.rollouts", "--rollouts"},
        {"search.max_steps", "--max-steps"},
        {"search.lambda", "--lambda"},
        {"search.epsilon", "--epsilon"},
        {"search.reward_strategy", "--reward-strategy"},
        {"search.gamma", "--gamma"},
        {"search.seed", "--seed"},
        {"paths.graph", "--graph"},
        {"paths.dataset", "--dataset"},
        {"paths.fixtures", "--fixtures"},
        {"paths.out", "--out"},
    };
    for (const auto& key : config_keys()) {
        std::string names = "--" + key;
        if (const auto alias = aliases.find(key); alias != aliases.end())
            names += "," + alias->second;
        cmd->add_option_function<std::string>(
            names,
            [&cap, key](const std::string& value) { cap.overrides.emplace_back(key, value); },
            "set " + key);
    }
}

AppConfig resolve_config(const ConfigCapture& cap) {
    AppConfig cfg;
    if (!cap.config_file.empty()) cfg = load_app_config(cap.config_file);
    for (const auto& [key, value] : cap.overrides) apply_override(cfg, key, value);
    return cfg;
}

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << bytes;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path, const std::string& field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(field, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json config_echo(const AppConfig& cfg) {
    return nlohmann::json::parse(config_to_json(cfg));
}

Gateway make_gateway(const AppConfig& cfg) {
    RetryPolicy retry;
    retry.max_retries = cfg.gateway.max_retries;
    retry.backoff_base_ms = cfg.gateway.backoff_base_ms;
    return Gateway(make_backend(cfg), retry);
}

RequestDefaults request_defaults(const AppConfig& cfg, double temperature) {
    RequestDefaults defaults;
    defaults.model = cfg.gateway.model;
    defaults.temperature = temperature;
    defaults.max_tokens = cfg.gateway.max_tokens;
    return defaults;
}

std::vector<TaskRecord> load_tasks(const AppConfig& cfg) {
    if (cfg.paths.dataset.empty()) throw ConfigError("paths.dataset", "dataset path not set");
    try {
        return load_dataset(cfg.paths.dataset);
    } catch (const std::exception& e) {
        throw ConfigError("paths.dataset", e.what());
    }
}

int cmd_build_graph(const AppConfig& cfg) {
    if (cfg.paths.graph.empty()) throw ConfigError("paths.graph", "output graph path not set");
    Logger log(log_level_from_string(cfg.log_level));
    const auto tasks = load_tasks(cfg);
    Gateway gateway = make_gateway(cfg);
    auto verifier = make_verifier(cfg);

    TrajectoryConfig tcfg;
    tcfg.acquire.model = cfg.gateway.model;
    tcfg.acquire.max_tokens = cfg.gateway.max_tokens;
    tcfg.relabel.model = cfg.gateway.model;
    tcfg.relabel.max_tokens = cfg.gateway.max_tokens;

    ReGraph graph;
    const BuildReport built = build_graph(tasks, gateway, *verifier, tcfg, graph);
    const GraphStats stats = graph.stats();
    save_graph(graph, cfg.paths.graph);

    nlohmann::json task_entries = nlohmann::json::array();
    for (const auto& task : built.tasks) {
        task_entries.push_back({{"task_id", task.task_id},
                                {"status", task.status},
                                {"reason", task.reason},
                                {"raw_steps", task.raw_steps},
                                {"merged_steps", task.merged_steps}});
    }
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [length, count] : built.trajectory_length_histogram)
        histogram[std::to_string(length)] = count;
    const nlohmann::json report = {
        {"config", config_echo(cfg)},
        {"tasks", std::move(task_entries)},
        {"trajectory_length_histogram", std::move(histogram)},
        {"merged", built.merged},
        {"skipped", built.skipped},
        {"graph",
         {{"nodes", stats.node_count},
          {"method_nodes", stats.method_node_count},
          {"edges", stats.edge_count},
          {"examples", stats.example_count}}}};
    const std::string report_path =
        cfg.paths.out.empty() ? cfg.paths.graph + ".report.json" : cfg.paths.out;
    write_file(report_path, report.dump(2) + "\n");

    log.info("graph built", {{"graph", cfg.paths.graph}, {"report", report_path}});
    std::cout << "merged=" << built.merged << " skipped=" << built.skipped
              << " nodes=" << stats.node_count << " edges=" << stats.edge_count
              << " examples=" << stats.example_count << "\n";
    return stats.method_node_count == 0 ? kExitEmptyGraph : kExitOk;
}

int cmd_graph_stats(const AppConfig& cfg) {
    if (cfg.paths.graph.empty()) throw ConfigError("paths.graph", "graph path not set");
    const ReGraph graph = load_graph(cfg.paths.graph);
    const GraphStats stats = graph.stats();
    std::cout << "nodes=" << stats.node_count << " edges=" << stats.edge_count
              << " examples=" << stats.example_count
              << " method_nodes=" << stats.method_node_count
              << " max_out_degree=" << stats.max_out_degree
              << " evicted_examples=" << stats.evicted_examples << "\n";
    return kExitOk;
}

int cmd_optimize(const AppConfig& cfg, const std::string& task_file, bool baseline) {
    if (cfg.paths.graph.empty()) throw ConfigError("paths.graph", "graph path not set");
    if (task_file.empty()) throw ConfigError("task", "task file not set");
    if (cfg.paths.out.empty()) throw ConfigError("paths.out", "output directory not set");
    Logger log(log_level_from_string(cfg.log_level));

    const ReGraph graph = load_graph(cfg.paths.graph);
    TaskRecord task;
    try {
        task = task_record_from_json_line(read_file(task_file, "task"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("task", e.what());
    }

    Gateway gateway = make_gateway(cfg);
    auto verifier = make_verifier(cfg);
    LlmOptimizer optimizer(gateway, request_defaults(cfg, 0.0));

    SearchTask search_task;
    search_task.task_id = task.id;
    search_task.initial_code = task.cpp_source;
    search_task.serial_source = task.cpp_source;
    search_task.tests = task.tests;

    log.info("search started", {{"task", task.id}, {"method", baseline ? "traversal" : "mcgs"}});
    const SearchResult result =
        baseline ? run_traversal_baseline(search_task, graph, optimizer, *verifier, cfg.search)
                 : run_mcgs(search_task, graph, optimizer, *verifier, cfg.search);

    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& entry : result.iteration_log) {
        iterations.push_back({{"iteration", entry.iteration},
                              {"selected_state", entry.selected_state},
                              {"expanded_children", entry.expanded_children},
                              {"rollout_rewards", entry.rollout_rewards},
                              {"rollout_steps", entry.rollout_steps}});
    }
    const nlohmann::json doc = {{"task_id", result.task_id},
                                {"method", baseline ? "traversal" : "mcgs"},
                                {"best_reward", result.best_reward},
                                {"best_code", result.best_code},
                                {"trajectory", result.trajectory},
                                {"budget_used", result.budget_used},
                                {"iterations", std::move(iterations)},
                                {"config", config_echo(cfg)}};
    const fs::path out_dir = cfg.paths.out;
    write_file(out_dir / "result.json", doc.dump(2) + "\n");
    write_file(out_dir / "best_code.cpp", result.best_code);
    std::cout << "best_reward=" << result.best_reward << "\n";
    return kExitOk;
}

int cmd_evaluate(const AppConfig& cfg, const std::string& method_name, int samples, int k) {
    if (cfg.paths.out.empty()) throw ConfigError("paths.out", "output directory not set");
    EvalMethod method;
    try {
        method = eval_method_from_string(method_name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("method", e.what());
    }
    const auto tasks = load_tasks(cfg);

    std::optional<ReGraph> graph;
    if (method == EvalMethod::regrapht || method == EvalMethod::mcgs) {
        if (cfg.paths.graph.empty()) throw ConfigError("paths.graph", "graph path not set");
        graph = load_graph(cfg.paths.graph);
    }

    Gateway gateway = make_gateway(cfg);
    auto verifier = make_verifier(cfg);
    EvalConfig ecfg;
    ecfg.samples = samples;
    ecfg.k = k;
    // Sampling temperature matches acquisition: diversity across n samples.
    ecfg.request = request_defaults(cfg, 0.7);
    ecfg.search = cfg.search;

    EvalReport report;
    try {
        report = evaluate(tasks, method, gateway, *verifier, ecfg,
                          graph ? &*graph : nullptr);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("method", e.what());
    }

    nlohmann::json doc = nlohmann::json::parse(eval_report_to_json(report));
    doc["config"] = config_echo(cfg);
    const fs::path out_dir = cfg.paths.out;
    write_file(out_dir / "report.json", doc.dump(2) + "\n");
    const std::string table = eval_report_table(report);
    write_file(out_dir / "report.txt", table);
    std::cout << table;
    return kExitOk;
}

int cmd_curate(const AppConfig& cfg, const std::string& in_dir, const std::string& denylist_csv,
               int min_lines, int max_lines) {
    if (in_dir.empty()) throw ConfigError("in-dir", "input directory not set");
    if (cfg.paths.out.empty()) throw ConfigError("paths.out", "output directory not set");
    if (!fs::is_directory(in_dir)) throw ConfigError("in-dir", in_dir + " is not a directory");

    std::vector<CurationInput> inputs;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (!entry.is_regular_file()) continue;
        inputs.push_back({entry.path().filename().string(), read_file(entry.path(), "in-dir")});
    }
    std::sort(inputs.begin(), inputs.end(),
              [](const CurationInput& a, const CurationInput& b) { return a.id < b.id; });

    CurateRules rules;
    rules.min_lines = min_lines;
    rules.max_lines = max_lines;
    if (!denylist_csv.empty()) {
        rules.denylist.clear();
        std::stringstream parts(denylist_csv);
        std::string item;
        while (std::getline(parts, item, ','))
            if (!item.empty()) rules.denylist.push_back(item);
    }

    Gateway gateway = make_gateway(cfg);
    auto verifier = make_verifier(cfg);
    const CurationReport report =
        curate_pipeline(inputs, gateway, *verifier, rules, request_defaults(cfg, 0.0));

    const fs::path out_dir = cfg.paths.out;
    fs::create_directories(out_dir);
    save_dataset(report.accepted, out_dir / "dataset.jsonl");
    nlohmann::json items = nlohmann::json::array();
    int rejected = 0;
    for (const auto& item : report.items) {
        if (item.status != CurateStatus::accepted) ++rejected;
        items.push_back({{"id", item.id},
                         {"status", curate_status_name(item.status)},
                         {"reason", item.reason}});
    }
    const nlohmann::json doc = {{"config", config_echo(cfg)},
                                {"items", std::move(items)},
                                {"accepted", report.accepted.size()},
                                {"rejected", rejected},
                                {"errored", report.errored}};
    write_file(out_dir / "report.json", doc.dump(2) + "\n");
    std::cout << "accepted=" << report.accepted.size() << " rejected=" << rejected
              << " errored=" << report.errored << "\n";
    return report.errored > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"reasoning-graph guided code optimization pipeline"};
    app.require_subcommand(1);

    ConfigCapture build_cap;
    CLI::App* build = app.add_subcommand("build-graph",
                                         "acquire, verify, relabel, and merge trajectories");
    add_config_options(build, build_cap);

    ConfigCapture stats_cap;
    CLI::App* stats = app.add_subcommand("graph-stats", "print size counters of a graph file");
    add_config_options(stats, stats_cap);

    ConfigCapture opt_cap;
    std::string task_file;
    bool baseline = false;
    CLI::App* optimize = app.add_subcommand("optimize", "search the graph for the best rewrite");
    add_config_options(optimize, opt_cap);
    optimize->add_option("--task", task_file, "task record file (one dataset JSON object)");
    optimize->add_flag("--baseline", baseline, "random traversal instead of MCGS");

    ConfigCapture eval_cap;
    std::string method_name;
    int samples = 1;
    int k = 1;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a method over a dataset");
    add_config_options(evaluate_cmd, eval_cap);
    evaluate_cmd->add_option("--method", method_name,
                             "standard | cot | rag | regrapht | mcgs")
        ->required();
    evaluate_cmd->add_option("--samples", samples, "candidates per task");
    evaluate_cmd->add_option("--k", k, "the k of pass@k / speedup@k");

    ConfigCapture curate_cap;
    std::string in_dir;
    std::string denylist_csv;
    CurateRules default_rules;
    int min_lines = default_rules.min_lines;
    int max_lines = default_rules.max_lines;
    CLI::App* curate = app.add_subcommand("curate", "filter and verify a raw source corpus");
    add_config_options(curate, curate_cap);
    curate->add_option("--in-dir", in_dir, "directory of candidate source files")->required();
    curate->add_option("--denylist", denylist_csv, "comma-separated third-party markers");
    curate->add_option("--min-lines", min_lines, "minimum function-body lines");
    curate->add_option("--max-lines", max_lines, "maximum function-body lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (build->parsed()) return cmd_build_graph(resolve_config(build_cap));
        if (stats->parsed()) return cmd_graph_stats(resolve_config(stats_cap));
        if (optimize->parsed())
            return cmd_optimize(resolve_config(opt_cap), task_file, baseline);
        if (evaluate_cmd->parsed())
            return cmd_evaluate(resolve_config(eval_cap), method_name, samples, k);
        if (curate->parsed())
            return cmd_curate(resolve_config(curate_cap), in_dir, denylist_csv, min_lines,
                              max_lines);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const GraphIoError& e) {
        std::cerr << "graph error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace regraph
