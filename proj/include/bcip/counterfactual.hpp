#pragma once

// Counterfactual search with feature control over the symbolic feature
// space: a genetic algorithm returning diverse candidates, a minimal-change
// selector, and an exhaustive enumerator used as the reference.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcip/classifier.hpp"

namespace bcip {

class ConstraintError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct CfConstraints {
    std::vector<std::string> mutable_features;
    /// Optional per-feature restriction; missing entries mean the full domain.
    std::map<std::string, std::vector<int>> allowed;
    int target_class = 1;
    int k_diverse = 4;
};

/// Mutable set = the five BCI features present in `schema`.
CfConstraints bci_constraints(const FeatureSchema& schema, int target_class = 1);

struct Counterfactual {
    FeatureRow original;
    FeatureRow modified;
    std::vector<std::string> changed_features;  // schema order
    int change_count = 0;
    double probability = 0.0;  // model P(target_class) at `modified`

    friend bool operator==(const Counterfactual&, const Counterfactual&) = default;
};

struct GaParams {
    int population_size = 50;
    int generations = 100;
    double mutation_rate = 0.3;
    double crossover_rate = 0.5;
    int elitism = 2;
    double sparsity_weight = 0.1;
    std::uint64_t seed = 0;

    friend bool operator==(const GaParams&, const GaParams&) = default;
};

void validate(const GaParams& params);

/// Up to k_diverse valid counterfactuals with pairwise-distinct change sets,
/// best fitness first; fitness = P(target) - sparsity_weight * changes / |mutable|.
/// An instance already predicted as the target yields one zero-change entry.
/// Empty when no valid candidate was found.
std::vector<Counterfactual> generate(const Classifier& model, std::span<const int> instance,
                                     const CfConstraints& constraints, const GaParams& params);
std::vector<Counterfactual> generate(const Classifier& model, const Sample& instance, const CfConstraints& constraints,
                                     const GaParams& params);

/// Fewest changes, then highest probability, then lexicographically smallest
/// changed-name list, then smallest summed value delta. Throws
/// std::invalid_argument("no counterfactual") on an empty list.
const Counterfactual& select_minimal(std::span<const Counterfactual> candidates);

inline constexpr std::uint64_t kDefaultGridCap = 1'000'000;

/// Enumerates change sets by increasing size (then schema order, then
/// ascending values) and returns the first valid one, so the result has the
/// minimum possible change count. nullopt when nothing within max_changes
/// flips the model. Throws ConstraintError when the mutable grid exceeds `cap`.
std::optional<Counterfactual> exhaustive_counterfactual(const Classifier& model, std::span<const int> instance,
                                                        const CfConstraints& constraints, int max_changes,
                                                        std::uint64_t cap = kDefaultGridCap);

/// {original, modified, changed_features, probability}; rows rendered as
/// {feature: token}.
nlohmann::json counterfactual_to_json(const FeatureSchema& schema, const Counterfactual& cf);
nlohmann::json row_to_json(const FeatureSchema& schema, std::span<const int> row);

}  // namespace bcip
