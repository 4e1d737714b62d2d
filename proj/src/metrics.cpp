#include "regraph/metrics.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace regraph {

double pass_at_k(int n, int c, int k) {
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument("pass_at_k: need 1 <= k <= n");
    if (c < 0 || c > n) throw std::invalid_argument("pass_at_k: need 0 <= c <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;
    // 1 - prod_{i=0}^{k-1} (n-c-i)/(n-i)
    double miss = 1.0;
    for (int i = 0; i < k; ++i)
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - miss;
}

double speedup_at_k(const std::vector<double>& speedups, const std::vector<bool>& passed,
                    int k) {
    int n = static_cast<int>(speedups.size());
    if (n < 1 || k < 1 || k > n)
        throw std::invalid_argument("speedup_at_k: need 1 <= k <= n");
    if (passed.size() != speedups.size())
        throw std::invalid_argument("speedup_at_k: passed/speedups size mismatch");

    std::vector<double> values(speedups.size());
    for (std::size_t i = 0; i < speedups.size(); ++i)
        values[i] = passed[i] ? speedups[i] : 0.0;
    std::sort(values.begin(), values.end());

    // P(max of the k-subset is the i-th smallest) = C(i, k-1) / C(n, k) with
    // 0-based i; accumulate the ratio incrementally to stay exact in double.
    // C(i, k-1)/C(n, k) for i = k-1 is k! (n-k)! (k-1)! ... compute iteratively:
    // w(k-1) = C(k-1,k-1)/C(n,k); w(i+1) = w(i) * (i+1)/(i+2-k).
    double expected = 0.0;
    // C(n,k) in double is exact for the sizes verified against enumeration and
    // accurate far beyond them; weights are formed by ratios of binomials.
    auto binom = [](int nn, int kk) {
        double r = 1.0;
        for (int i = 1; i <= kk; ++i)
            r = r * static_cast<double>(nn - kk + i) / static_cast<double>(i);
        return r;
    };
    double denom = binom(n, k);
    for (int i = k - 1; i < n; ++i) {
        double weight = binom(i, k - 1) / denom;
        expected += weight * values[static_cast<std::size_t>(i)];
    }
    return expected;
}

Tier tier_of(int trajectory_length) {
    if (trajectory_length < 1)
        throw std::invalid_argument("tier_of: trajectory length must be >= 1");
    if (trajectory_length <= 2) return Tier::easy;
    if (trajectory_length <= 5) return Tier::medium;
    return Tier::hard;
}

std::vector<std::size_t> stratified_sample(const std::vector<TaskRecord>& records,
                                           const StratifiedTargets& targets,
                                           std::uint64_t seed) {
    std::vector<std::size_t> easy, medium, hard, untiered;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].tier) {
            untiered.push_back(i);
        } else if (*records[i].tier == Tier::easy) {
            easy.push_back(i);
        } else if (*records[i].tier == Tier::medium) {
            medium.push_back(i);
        } else {
            hard.push_back(i);
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    auto draw = [&](std::vector<std::size_t>& bucket, int target) {
        std::shuffle(bucket.begin(), bucket.end(), rng);
        int take = std::min<int>(target, static_cast<int>(bucket.size()));
        chosen.insert(chosen.end(), bucket.begin(), bucket.begin() + take);
    };
    draw(easy, targets.easy);
    draw(medium, targets.medium);
    draw(hard, targets.hard);
    draw(untiered, targets.untiered);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace regraph
