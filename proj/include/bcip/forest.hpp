#pragma once

// CART decision trees and random forests over an EncodedMatrix, with
// weighted Gini splits and balanced class weighting.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcip/dataset.hpp"

namespace bcip {

enum class MaxFeatures : std::uint8_t { sqrt, all };
enum class ClassWeighting : std::uint8_t { none, balanced };

struct ForestParams {
    int n_trees = 100;
    MaxFeatures max_features = MaxFeatures::sqrt;
    int min_samples_split = 2;
    std::optional<int> max_depth;  // unlimited when empty
    bool bootstrap = true;
    ClassWeighting class_weighting = ClassWeighting::balanced;
    std::uint64_t seed = 0;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

void validate(const ForestParams& params);

/// weight(k) = N / (K * N_k) over the classes present in `labels`.
std::map<int, double> balanced_weights(std::span<const int> labels);

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // go left iff x[feature] <= threshold
    int left = -1;
    int right = -1;
    std::vector<double> proba;  // leaves only, over Forest::classes

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat node array; node 0 is the root.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    const std::vector<double>& leaf_proba(std::span<const double> row) const;
    int depth() const;
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
    std::vector<int> classes;  // ascending
    std::size_t n_features = 0;
    ForestParams params;
    std::vector<DecisionTree> trees;

    /// Mean of the per-tree leaf distributions. Throws ValidationError on a
    /// dimension mismatch.
    std::vector<double> predict_proba(std::span<const double> row) const;
    /// Argmax of predict_proba; ties go to the smaller class label.
    int predict(std::span<const double> row) const;
    /// Row-major n_rows x classes. Walks one tree at a time over all rows;
    /// each row's value equals predict_proba(row) exactly.
    std::vector<double> predict_proba(const EncodedMatrix& m) const;
    std::vector<int> predict(const EncodedMatrix& m) const;

    friend bool operator==(const Forest&, const Forest&) = default;
};

/// Trees are grown in parallel on up to `threads` workers (0: hardware
/// concurrency). Each tree draws from its own stream mix(seed, tree_index),
/// so the forest is identical for every thread count. A single-class matrix
/// gives a constant predictor.
Forest fit(const EncodedMatrix& matrix, const ForestParams& params, std::size_t threads = 1);

/// Canonical JSON export: sorted keys, floats rounded to 9 significant
/// digits. Identical forests produce identical strings.
std::string forest_to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);

/// Argmax with ties toward the lower index.
std::size_t argmax(std::span<const double> values);

}  // namespace bcip
