#pragma once

// The two personalisation architectures: a direct behaviour classifier, and
// the two-step system (features -> MAT, then MAT + patient -> behaviour) with
// one counterfactual pass per step.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcip/classifier.hpp"
#include "bcip/counterfactual.hpp"
#include "bcip/dataset.hpp"
#include "bcip/forest.hpp"

namespace bcip {

struct DirectModel {
    Classifier classifier;  // behaviour over schema_default() [+ patient_id]
    bool include_patient_id = false;
    std::vector<std::string> warnings;

    int predict(const Sample& s) const;
    std::vector<int> predict(std::span<const Sample> samples) const;
};

struct TwoStepModel {
    Classifier motivation;  // 5-class, schema_default()
    Classifier ability;
    Classifier trigger;
    Classifier behaviour;   // binary, mat_schema(patient ids)
    std::vector<std::string> warnings;

    /// Step-1 predicted MAT.
    MatVector predict_mat(const Sample& s) const;
    /// Row for the behaviour step.
    FeatureRow behaviour_row(const MatVector& mat, int patient_id) const;
    /// Step 1 then step 2. An unknown patient id encodes as an all-zero
    /// identifier block.
    int predict(const Sample& s) const;
    std::vector<MatVector> predict_mat(std::span<const Sample> samples) const;
    std::vector<int> predict(std::span<const Sample> samples) const;
};

/// Throws ValidationError on an empty training set. A single-class training
/// set yields a constant model and a warning.
DirectModel train_direct(const Dataset& train, bool include_patient_id, const ForestParams& params,
                         std::size_t threads = 1);

/// Four forests: M, A, T from the 14 observable features, behaviour from
/// ground-truth MAT + patient id. Throws SchemaViolation when a row lacks MAT.
TwoStepModel train_two_step(const Dataset& train, const ForestParams& params, std::size_t threads = 1);

/// Rule-based stand-ins that reproduce the simulator exactly; `thresholds`
/// maps patient id -> action threshold.
TwoStepModel oracle_two_step(const std::map<int, int>& thresholds);
Classifier oracle_behaviour_classifier(const FeatureSchema& schema, int action_threshold);

/// Minimal BCI change making the direct model predict 1; a zero-change
/// result when it already does; nullopt when the search finds nothing.
std::optional<Counterfactual> personalize_direct(const DirectModel& model, const Sample& instance,
                                                 const GaParams& ga, int k_diverse = 4);

struct TwoStepPersonalization {
    MatVector current_mat;        // step-1 prediction on the instance
    MatVector mat_target;         // pass-1 minimal MAT change
    Counterfactual bci_change;    // over schema_default()
};

/// Pass 1 searches MAT space on the behaviour forest (patient id fixed);
/// pass 2 searches BCI space on each changed dimension's step-1 forest,
/// trying the exact target first and then each higher value up to 4. The
/// combined change is returned only when the full two-step prediction on the
/// modified instance is 1.
std::optional<TwoStepPersonalization> personalize_two_step(const TwoStepModel& model, const Sample& instance,
                                                           const GaParams& ga, int k_diverse = 4);

/// {original_bci, revised_bci, mat_target, changed_features, change_count}
nlohmann::json personalization_to_json(const Sample& instance, const Counterfactual& bci_change,
                                       const std::optional<MatVector>& mat_target);

/// Model persistence. Forests use the canonical forest JSON; schemas are
/// stored as feature names plus the identifier domain.
nlohmann::json model_to_json(const DirectModel& model);
nlohmann::json model_to_json(const TwoStepModel& model);
/// "direct" or "two_step".
std::string model_kind(const nlohmann::json& j);
DirectModel direct_model_from_json(const nlohmann::json& j);
TwoStepModel two_step_model_from_json(const nlohmann::json& j);

/// Instance documents: patient_id plus the 14 observable features, nominal
/// values as labels. Unknown or missing keys and out-of-domain values throw
/// ValidationError.
Sample sample_from_json(const nlohmann::json& j);
nlohmann::json sample_to_json(const Sample& s);

}  // namespace bcip
