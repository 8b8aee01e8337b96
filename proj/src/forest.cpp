#include "bcip/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "bcip/parallel.hpp"
#include "bcip/rng.hpp"

namespace bcip {

void validate(const ForestParams& params) {
    if (params.n_trees < 1) throw ValidationError("n_trees must be >= 1");
    if (params.min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
    if (params.max_depth && *params.max_depth < 0) throw ValidationError("max_depth must be >= 0");
}

std::map<int, double> balanced_weights(std::span<const int> labels) {
    if (labels.empty()) throw ValidationError("balanced_weights needs at least one label");
    std::map<int, std::size_t> counts;
    for (int y : labels) ++counts[y];
    const auto n = static_cast<double>(labels.size());
    const auto k = static_cast<double>(counts.size());
    std::map<int, double> w;
    for (auto [label, c] : counts) w[label] = n / (k * static_cast<double>(c));
    return w;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

const std::vector<double>& DecisionTree::leaf_proba(std::span<const double> row) const {
    std::size_t n = 0;
    while (!nodes[n].is_leaf()) {
        const auto& node = nodes[n];
        n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return nodes[n].proba;
}

int DecisionTree::depth() const {
    // Children are always appended after their parent.
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::vector<double> Forest::predict_proba(std::span<const double> row) const {
    if (row.size() != n_features)
        throw ValidationError("row has " + std::to_string(row.size()) + " columns, forest expects " +
                              std::to_string(n_features));
    std::vector<double> acc(classes.size(), 0.0);
    for (const auto& tree : trees) {
        const auto& p = tree.leaf_proba(row);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += p[k];
    }
    for (auto& v : acc) v /= static_cast<double>(trees.size());
    return acc;
}

int Forest::predict(std::span<const double> row) const { return classes[argmax(predict_proba(row))]; }

std::vector<double> Forest::predict_proba(const EncodedMatrix& m) const {
    if (m.n_cols != n_features)
        throw ValidationError("matrix has " + std::to_string(m.n_cols) + " columns, forest expects " +
                              std::to_string(n_features));
    const auto k = classes.size();
    std::vector<double> acc(m.n_rows * k, 0.0);
    // Row blocks keep both the rows and the current tree in cache.
    constexpr std::size_t kBlock = 256;
    for (std::size_t begin = 0; begin < m.n_rows; begin += kBlock) {
        const auto end = std::min(m.n_rows, begin + kBlock);
        for (const auto& tree : trees) {
            for (std::size_t r = begin; r < end; ++r) {
                const auto& p = tree.leaf_proba(m.row(r));
                for (std::size_t c = 0; c < k; ++c) acc[r * k + c] += p[c];
            }
        }
    }
    for (auto& v : acc) v /= static_cast<double>(trees.size());
    return acc;
}

std::vector<int> Forest::predict(const EncodedMatrix& m) const {
    const auto proba = predict_proba(m);
    const auto k = classes.size();
    std::vector<int> out;
    out.reserve(m.n_rows);
    for (std::size_t r = 0; r < m.n_rows; ++r) out.push_back(classes[argmax({proba.data() + r * k, k})]);
    return out;
}

// ---------------------------------------------------------------------------
// Tree growing

namespace {

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const EncodedMatrix& m, std::span<const std::size_t> y, std::span<const double> w, std::size_t n_classes,
                const ForestParams& params, Rng& rng)
        : m_(m), y_(y), w_(w), k_(n_classes), params_(params), rng_(rng) {
        const auto d = m.n_cols;
        max_features_ = params.max_features == MaxFeatures::all
                            ? d
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> rows, int depth) {
        std::vector<double> totals(k_, 0.0);
        for (auto r : rows) totals[y_[r]] += w_[r];
        const double total = std::accumulate(totals.begin(), totals.end(), 0.0);

        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        const auto present = std::count_if(totals.begin(), totals.end(), [](double t) { return t > 0.0; });
        const bool stop = present <= 1 || rows.size() < static_cast<std::size_t>(params_.min_samples_split) ||
                          (params_.max_depth && depth >= *params_.max_depth);
        std::optional<SplitCandidate> split;
        if (!stop) split = best_split(rows, totals, total);
        if (!split) {
            auto& leaf = tree_.nodes[static_cast<std::size_t>(id)];
            leaf.proba.resize(k_);
            for (std::size_t k = 0; k < k_; ++k) leaf.proba[k] = totals[k] / total;
            return id;
        }

        std::vector<std::size_t> left, right;
        for (auto r : rows) (m_.values[r * m_.n_cols + static_cast<std::size_t>(split->feature)] <= split->threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    static double weighted_impurity(std::span<const double> totals, double w) {
        if (w <= 0.0) return 0.0;
        double sq = 0.0;
        for (double t : totals) sq += t * t;
        return w - sq / w;
    }

    std::optional<SplitCandidate> best_split(const std::vector<std::size_t>& rows, const std::vector<double>& totals,
                                             double total) {
        const auto d = m_.n_cols;
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), 0);
        if (max_features_ < d) rng_.shuffle(order.begin(), order.end());

        const double parent = weighted_impurity(totals, total);
        const double eps = 1e-10 * (1.0 + total);
        std::optional<SplitCandidate> best;
        std::vector<std::pair<double, std::size_t>> vals(rows.size());
        std::vector<double> left(k_), right(k_);
        std::size_t visited = 0;
        bool any_varying = false;

        // Every drawn column uses up the budget, constant or not; drawing
        // continues past it only while no varying column has been seen.
        for (std::size_t f : order) {
            if (visited >= max_features_ && any_varying) break;
            ++visited;
            double lo = m_.values[rows[0] * m_.n_cols + f], hi = lo;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double v = m_.values[rows[i] * m_.n_cols + f];
                vals[i] = {v, rows[i]};
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (lo == hi) continue;
            any_varying = true;
            std::sort(vals.begin(), vals.end());

            std::fill(left.begin(), left.end(), 0.0);
            double wl = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const auto r = vals[i].second;
                left[y_[r]] += w_[r];
                wl += w_[r];
                if (vals[i].first == vals[i + 1].first) continue;
                for (std::size_t k = 0; k < k_; ++k) right[k] = totals[k] - left[k];
                const double gain = parent - weighted_impurity(left, wl) - weighted_impurity(right, total - wl);
                const auto fi = static_cast<int>(f);
                const bool better = !best || gain > best->gain + eps ||
                                    (gain >= best->gain - eps && fi < best->feature);
                if (better) best = SplitCandidate{fi, 0.5 * (vals[i].first + vals[i + 1].first), gain};
            }
        }
        return best;
    }

    const EncodedMatrix& m_;
    std::span<const std::size_t> y_;
    std::span<const double> w_;
    std::size_t k_;
    const ForestParams& params_;
    Rng& rng_;
    std::size_t max_features_ = 1;
    DecisionTree tree_;
};

}  // namespace

Forest fit(const EncodedMatrix& matrix, const ForestParams& params, std::size_t threads) {
    validate(params);
    if (matrix.n_rows == 0) throw ValidationError("cannot fit a forest on an empty matrix");
    if (matrix.labels.size() != matrix.n_rows) throw ValidationError("label count does not match row count");

    Forest forest;
    forest.params = params;
    forest.n_features = matrix.n_cols;
    forest.classes = matrix.labels;
    std::sort(forest.classes.begin(), forest.classes.end());
    forest.classes.erase(std::unique(forest.classes.begin(), forest.classes.end()), forest.classes.end());

    std::vector<std::size_t> y(matrix.n_rows);
    for (std::size_t r = 0; r < matrix.n_rows; ++r)
        y[r] = static_cast<std::size_t>(
            std::lower_bound(forest.classes.begin(), forest.classes.end(), matrix.labels[r]) - forest.classes.begin());

    std::vector<double> class_weight(forest.classes.size(), 1.0);
    if (params.class_weighting == ClassWeighting::balanced) {
        auto bw = balanced_weights(matrix.labels);
        for (std::size_t k = 0; k < forest.classes.size(); ++k) class_weight[k] = bw.at(forest.classes[k]);
    }

    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
        Rng rng(mix(params.seed, t));
        std::vector<double> w(matrix.n_rows, 0.0);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < matrix.n_rows; ++i) w[rng.index(matrix.n_rows)] += 1.0;
        } else {
            std::fill(w.begin(), w.end(), 1.0);
        }
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < matrix.n_rows; ++r) {
            if (w[r] > 0.0) {
                w[r] *= class_weight[y[r]];
                rows.push_back(r);
            }
        }
        TreeBuilder builder(matrix, y, w, forest.classes.size(), params, rng);
        forest.trees[t] = builder.build(std::move(rows));
    });
    return forest;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

double round9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

json node_to_json(const DecisionTree& tree, std::size_t n) {
    const auto& node = tree.nodes[n];
    json j;
    if (node.is_leaf()) {
        json p = json::array();
        for (double v : node.proba) p.push_back(round9(v));
        j["proba"] = p;
        return j;
    }
    j["feature"] = node.feature;
    j["threshold"] = round9(node.threshold);
    j["left"] = node_to_json(tree, static_cast<std::size_t>(node.left));
    j["right"] = node_to_json(tree, static_cast<std::size_t>(node.right));
    return j;
}

int node_from_json(const json& j, DecisionTree& tree, std::size_t n_classes, std::size_t n_features) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("proba")) {
        auto p = j.at("proba").get<std::vector<double>>();
        if (p.size() != n_classes) throw ValidationError("leaf probability vector has the wrong length");
        tree.nodes[static_cast<std::size_t>(id)].proba = std::move(p);
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) throw ValidationError("split feature out of range");
    const double threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), tree, n_classes, n_features);
    const int r = node_from_json(j.at("right"), tree, n_classes, n_features);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = l;
    node.right = r;
    return id;
}

}  // namespace

std::string forest_to_json(const Forest& forest) {
    json j;
    j["classes"] = forest.classes;
    j["n_features"] = forest.n_features;
    json p;
    p["n_trees"] = forest.params.n_trees;
    p["max_features"] = forest.params.max_features == MaxFeatures::sqrt ? "sqrt" : "all";
    p["min_samples_split"] = forest.params.min_samples_split;
    p["max_depth"] = forest.params.max_depth ? json(*forest.params.max_depth) : json(nullptr);
    p["bootstrap"] = forest.params.bootstrap;
    p["class_weighting"] = forest.params.class_weighting == ClassWeighting::balanced ? "balanced" : "none";
    p["seed"] = forest.params.seed;
    j["params"] = p;
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(node_to_json(t, 0));
    j["trees"] = std::move(trees);
    return j.dump();
}

Forest forest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        Forest f;
        f.classes = j.at("classes").get<std::vector<int>>();
        f.n_features = j.at("n_features").get<std::size_t>();
        const auto& p = j.at("params");
        f.params.n_trees = p.at("n_trees").get<int>();
        f.params.max_features = p.at("max_features").get<std::string>() == "all" ? MaxFeatures::all : MaxFeatures::sqrt;
        f.params.min_samples_split = p.at("min_samples_split").get<int>();
        if (!p.at("max_depth").is_null()) f.params.max_depth = p.at("max_depth").get<int>();
        f.params.bootstrap = p.at("bootstrap").get<bool>();
        f.params.class_weighting =
            p.at("class_weighting").get<std::string>() == "none" ? ClassWeighting::none : ClassWeighting::balanced;
        f.params.seed = p.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) {
            DecisionTree tree;
            node_from_json(t, tree, f.classes.size(), f.n_features);
            f.trees.push_back(std::move(tree));
        }
        if (f.trees.empty() || f.classes.empty()) throw ValidationError("forest JSON has no trees or classes");
        return f;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed forest JSON: ") + e.what());
    }
}

}  // namespace bcip
