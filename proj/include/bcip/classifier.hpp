#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "bcip/domain.hpp"
#include "bcip/forest.hpp"

namespace bcip {

/// A model over symbolic feature rows. Either a fitted forest (rows are
/// encoded against the schema before prediction) or an arbitrary function,
/// which is how exact oracles stand in for forests in tests.
class Classifier {
public:
    using ProbaFn = std::function<std::vector<double>(std::span<const int>)>;

    Classifier() = default;
    static Classifier from_forest(FeatureSchema schema, Forest forest);
    static Classifier from_function(FeatureSchema schema, std::vector<int> classes, ProbaFn fn);

    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<int>& classes() const noexcept { return classes_; }
    /// Null for function-backed classifiers.
    const Forest* forest() const noexcept { return forest_.get(); }

    /// Probability over classes(). Unknown identifiers encode as zeros.
    std::vector<double> predict_proba(std::span<const int> row) const;
    /// Argmax, ties toward the smaller label.
    int predict(std::span<const int> row) const;
    /// Same as predict() on each row, batched for forests.
    std::vector<int> predict(std::span<const FeatureRow> rows) const;
    /// 0 when `label` is not one of classes().
    double probability_of(std::span<const int> row, int label) const;

private:
    FeatureSchema schema_;
    std::vector<int> classes_;
    std::shared_ptr<const Forest> forest_;
    ProbaFn fn_;
};

}  // namespace bcip
