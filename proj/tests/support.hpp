#pragma once

// Independent oracles and fixture builders shared by the test suites. The
// oracles transcribe the published formulas and algorithm sketches directly,
// with no calls into the library's own logic, so agreement between the two
// routes is evidence of correctness rather than a tautology.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "regraph/graph.hpp"

namespace regraph::testing {

// ---------------------------------------------------------------------------
// Reference trajectory merger: the naive transcription of the generation
// algorithm. State starts at the initial node; each step appends its example
// to the (state, method) edge and moves state to the method.

struct NaiveStep {
    std::string method;
    std::string example_tag;  // stand-in for the example payload identity
};

struct NaiveTrajectory {
    std::vector<NaiveStep> steps;
};

struct NaiveGraph {
    std::set<std::string> nodes;                                          // includes init
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> edges;
};

NaiveGraph naive_merge(const std::vector<NaiveTrajectory>& trajectories,
                       const std::string& init_name);

// Seeded trajectory corpus: `count` trajectories with 1..max_len steps over
// `alphabet` method names, chain-consistent codes. Returns the library-typed
// trajectories and the equivalent plain-string form for the naive merger
// (tagged by each step's optimized code).
struct TrajectoryCorpus {
    std::vector<Trajectory> typed;
    std::vector<NaiveTrajectory> plain;
};

TrajectoryCorpus make_random_trajectories(std::uint64_t seed, int count, int alphabet,
                                          int max_len);

// True when the merged graph matches the naive reference: same node names,
// same edge keys, and the same ordered optimized-code sequence per edge.
bool graphs_agree(const ReGraph& merged, const NaiveGraph& reference);

// ---------------------------------------------------------------------------
// Subset-enumeration oracles for the sampling metrics.

// Mean over all C(n,k) index subsets of 1[subset hits one of the first c].
double pass_at_k_enum(int n, int c, int k);

// Mean over all C(n,k) subsets of max(passed_i ? speedup_i : 0).
double speedup_at_k_enum(const std::vector<double>& speedups, const std::vector<bool>& passed,
                         int k);

// ---------------------------------------------------------------------------
// Reward-strategy oracles, transcribed from the appendix summations.

struct OracleDesign {
    std::vector<bool> test_passes;
    double speedup = 0.0;
};

// (1/|D_pass-all|) sum of p(d) over designs passing every test; -1 when none.
double strict_reward_oracle(const std::vector<OracleDesign>& designs);

// (1/m) sum over tests t of the mean p(d) over designs passing t (0 when none
// pass t). m is the largest per-design test count.
double partial_reward_oracle(const std::vector<OracleDesign>& designs);

// sum over t from 0 of gamma^t * r_t.
double rollout_reward_oracle(const std::vector<double>& step_rewards, double gamma);

// ---------------------------------------------------------------------------
// Greedy-policy oracle: argmax over actions of q(a) - lambda*n(a), untried
// actions scoring q0, first lexicographic winner on ties.

struct ActionStat {
    double q = 0.0;
    int n = 0;
    bool tried = false;
};

std::string greedy_policy_oracle(const std::vector<std::string>& actions,
                                 const std::map<std::string, ActionStat>& stats, double lambda,
                                 double q0);

// ---------------------------------------------------------------------------
// Statistics helpers.

// Upper critical value of the chi-square distribution at significance 0.01.
double chi_square_crit_99(int df);

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p(int wins, int trials);

// ---------------------------------------------------------------------------
// Random structure builders (seeded, deterministic).

struct RandomGraphSpec {
    int nodes = 0;                          // method nodes, init excluded
    std::vector<std::string> names;         // method node names
    std::string json;                       // loadable graph file content
    int back_edges = 0;                     // edges that close cycles
};

// Connected-from-init directed graph with >= 30% of nodes carrying a
// cycle-closing back edge and no sinks. 5 to 40 method nodes.
RandomGraphSpec build_random_cyclic_graph(std::uint64_t seed);

struct PlantedLandscape {
    std::string graph_json;
    std::string landscape_json;
    std::vector<std::string> optimum_path;  // method sequence scoring 10
};

// Small graph plus a path-keyed score table: one planted optimum at speedup
// 10 with a rising prefix gradient, a few decoys at speedup <= 6, neutral
// fallback.
PlantedLandscape build_planted_landscape(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Filesystem scratch.

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace regraph::testing
