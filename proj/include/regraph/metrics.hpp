#pragma once

#include <cstdint>
#include <vector>

#include "regraph/dataset.hpp"

namespace regraph {

// Probability that at least one of k samples drawn without replacement from n
// is correct, given c correct: 1 - C(n-c,k)/C(n,k), in overflow-safe product
// form. Requires 1 <= k <= n and 0 <= c <= n.
double pass_at_k(int n, int c, int k);

// Expected best speedup among k samples drawn without replacement. Failed
// samples contribute speedup 0. Exact order-statistic form. Requires
// 1 <= k <= n where n = speedups.size(); passed.size() == speedups.size().
double speedup_at_k(const std::vector<double>& speedups, const std::vector<bool>& passed,
                    int k);

// Difficulty from verified trajectory length: 1-2 easy, 3-5 medium, 6+ hard.
// Length 0 is invalid.
Tier tier_of(int trajectory_length);

// Seeded stratified draw: picks up to the target count per tier, shuffling
// within each tier. Records without a tier fall into the untiered bucket and
// are drawn with untiered_target. Returns indices into `records`, ascending.
struct StratifiedTargets {
    int easy = 0;
    int medium = 0;
    int hard = 0;
    int untiered = 0;
};

std::vector<std::size_t> stratified_sample(const std::vector<TaskRecord>& records,
                                           const StratifiedTargets& targets,
                                           std::uint64_t seed);

}  // namespace regraph
