#pragma once

// Brute-force root split: every feature, every midpoint between adjacent
// distinct values, scored by weighted Gini decrease written out from the
// textbook definition. Used to check the tree builder.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "bcip/rng.hpp"

namespace gini_oracle {

struct Data {
    std::size_t n_cols = 0;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

inline double gini(const std::map<int, double>& w) {
    double total = 0.0;
    for (const auto& [_, v] : w) total += v;
    if (total == 0.0) return 0.0;
    double s = 1.0;
    for (const auto& [_, v] : w) s -= (v / total) * (v / total);
    return s;
}

/// Weight of a row: N / (K * N_k) over the label counts.
inline std::vector<double> balanced(const std::vector<int>& y) {
    std::map<int, int> counts;
    for (int v : y) ++counts[v];
    std::vector<double> w;
    for (int v : y)
        w.push_back(static_cast<double>(y.size()) / (static_cast<double>(counts.size()) * counts[v]));
    return w;
}

/// Best split; ties (decrease within 1e-9) go to the lowest feature, then
/// the lowest threshold. nullopt when the node is pure or every feature is
/// constant.
inline std::optional<Split> best_root_split(const Data& d, const std::vector<double>& w) {
    std::map<int, double> all;
    for (std::size_t i = 0; i < d.y.size(); ++i) all[d.y[i]] += w[i];
    if (all.size() < 2) return std::nullopt;
    double total = 0.0;
    for (const auto& [_, v] : all) total += v;

    std::vector<Split> candidates;
    for (std::size_t f = 0; f < d.n_cols; ++f) {
        std::set<double> values;
        for (const auto& row : d.x) values.insert(row[f]);
        for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
            const double t = (*it + *std::next(it)) / 2.0;
            std::map<int, double> l, r;
            double wl = 0.0, wr = 0.0;
            for (std::size_t i = 0; i < d.x.size(); ++i) {
                if (d.x[i][f] <= t) {
                    l[d.y[i]] += w[i];
                    wl += w[i];
                } else {
                    r[d.y[i]] += w[i];
                    wr += w[i];
                }
            }
            const double dec = total * gini(all) - wl * gini(l) - wr * gini(r);
            candidates.push_back({static_cast<int>(f), t, dec});
        }
    }
    if (candidates.empty()) return std::nullopt;
    double best = candidates.front().decrease;
    for (const auto& c : candidates) best = std::max(best, c.decrease);
    std::optional<Split> pick;
    for (const auto& c : candidates) {
        if (c.decrease < best - 1e-9) continue;
        if (!pick || c.feature < pick->feature || (c.feature == pick->feature && c.threshold < pick->threshold))
            pick = c;
    }
    return pick;
}

/// Random small dataset: 2..12 rows, 1..5 integer features in [0, 3],
/// 2 or 3 classes.
inline Data random_data(bcip::Rng& rng) {
    auto draw = [&](int lo, int hi) { return rng.uniform_int(lo, hi); };
    Data d;
    const int rows = draw(2, 12);
    d.n_cols = static_cast<std::size_t>(draw(1, 5));
    const int classes = draw(2, 3);
    for (int i = 0; i < rows; ++i) {
        std::vector<double> row;
        for (std::size_t f = 0; f < d.n_cols; ++f) row.push_back(draw(0, 3));
        d.x.push_back(row);
        d.y.push_back(draw(0, classes - 1));
    }
    return d;
}

}  // namespace gini_oracle
