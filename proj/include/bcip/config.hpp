#pragma once

// JSON run configuration shared by every CLI subcommand. All sections and
// keys are optional; unknown keys are rejected before any work starts.
//
//   {
//     "cohort":     {"n_patients", "threshold_policy", "samples_per_patient", "seed"},
//     "forest":     {"n_trees", "max_features", "min_samples_split", "max_depth",
//                    "bootstrap", "class_weighting", "seed"},
//     "ga":         {"population_size", "generations", "mutation_rate", "crossover_rate",
//                    "elitism", "sparsity_weight", "seed", "k_diverse"},
//     "train":      {"include_patient_id"},
//     "experiment": {"thresholds", "patient_counts", "fractions_below_40", "train_sizes",
//                    "test_size", "repetitions", "master_seed"}
//   }
//
// threshold_policy is {"type": "fixed", "value": v}, {"type": "uniform"} or
// {"type": "stratified", "fraction_below_40": f}.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bcip/counterfactual.hpp"
#include "bcip/experiments.hpp"
#include "bcip/forest.hpp"
#include "bcip/simulator.hpp"

namespace bcip {

struct RunConfig {
    CohortConfig cohort;
    ForestParams forest;
    GaParams ga;
    int k_diverse = 4;
    bool include_patient_id = false;
    /// Overrides on top of ExperimentConfig::defaults(id); unset keys keep
    /// the experiment's defaults.
    nlohmann::json experiment = nlohmann::json::object();

    ExperimentConfig experiment_config(ExperimentId id) const;
};

/// Throws ValidationError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace bcip
