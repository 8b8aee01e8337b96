#include "bcip/pipeline.hpp"

#include <algorithm>
#include <array>

#include "bcip/simulator.hpp"

namespace bcip {

namespace {

constexpr std::array<Field, 3> kMatFields = {Field::mat_m, Field::mat_a, Field::mat_t};

std::vector<double> one_hot(const std::vector<int>& classes, int label) {
    std::vector<double> p(classes.size(), 0.0);
    for (std::size_t k = 0; k < classes.size(); ++k)
        if (classes[k] == label) p[k] = 1.0;
    return p;
}

std::string single_class_warning(const std::string& what, int label) {
    return what + ": training labels contain a single class (" + std::to_string(label) +
           "); model is a constant predictor";
}

Classifier fit_classifier(const Dataset& train, FeatureSchema schema, LabelKind label, const ForestParams& params,
                          std::size_t threads, std::vector<std::string>& warnings, const std::string& what) {
    auto view = train.with_schema(schema, label);
    auto forest = fit(encode(view), params, threads);
    if (forest.classes.size() == 1) warnings.push_back(single_class_warning(what, forest.classes.front()));
    return Classifier::from_forest(std::move(schema), std::move(forest));
}

const Classifier& step1(const TwoStepModel& m, std::size_t dim) {
    return dim == 0 ? m.motivation : dim == 1 ? m.ability : m.trigger;
}

int mat_component(const MatVector& v, std::size_t dim) {
    return dim == 0 ? v.motivation : dim == 1 ? v.ability : v.trigger;
}

}  // namespace

int DirectModel::predict(const Sample& s) const { return classifier.predict(extract_row(classifier.schema(), s)); }

std::vector<int> DirectModel::predict(std::span<const Sample> samples) const {
    std::vector<FeatureRow> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(extract_row(classifier.schema(), s));
    return classifier.predict(rows);
}

std::vector<MatVector> TwoStepModel::predict_mat(std::span<const Sample> samples) const {
    std::vector<FeatureRow> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(extract_row(motivation.schema(), s));
    const auto m = motivation.predict(rows);
    const auto a = ability.predict(rows);
    const auto t = trigger.predict(rows);
    std::vector<MatVector> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out.push_back({m[i], a[i], t[i]});
    return out;
}

std::vector<int> TwoStepModel::predict(std::span<const Sample> samples) const {
    const auto mats = predict_mat(samples);
    std::vector<FeatureRow> rows;
    rows.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) rows.push_back(behaviour_row(mats[i], samples[i].patient_id));
    return behaviour.predict(rows);
}

MatVector TwoStepModel::predict_mat(const Sample& s) const {
    const auto row = extract_row(motivation.schema(), s);
    return MatVector{motivation.predict(row), ability.predict(row), trigger.predict(row)};
}

FeatureRow TwoStepModel::behaviour_row(const MatVector& mat, int patient_id) const {
    return FeatureRow{mat.motivation, mat.ability, mat.trigger, patient_id};
}

int TwoStepModel::predict(const Sample& s) const {
    return behaviour.predict(behaviour_row(predict_mat(s), s.patient_id));
}

DirectModel train_direct(const Dataset& train, bool include_patient_id, const ForestParams& params,
                         std::size_t threads) {
    if (train.empty()) throw ValidationError("training set is empty");
    DirectModel m;
    m.include_patient_id = include_patient_id;
    auto ids = train.patient_ids();
    auto schema = include_patient_id ? with_identifier(schema_default(), ids) : schema_default();
    m.classifier = fit_classifier(train, std::move(schema), LabelKind::behaviour, params, threads, m.warnings, "behaviour");
    return m;
}

TwoStepModel train_two_step(const Dataset& train, const ForestParams& params, std::size_t threads) {
    if (train.empty()) throw ValidationError("training set is empty");
    for (const auto& s : train.rows)
        if (!s.mat) throw SchemaViolation("mat_m", "two-step training needs ground-truth MAT on every row");
    TwoStepModel m;
    m.motivation = fit_classifier(train, schema_default(), LabelKind::motivation, params, threads, m.warnings, "motivation");
    m.ability = fit_classifier(train, schema_default(), LabelKind::ability, params, threads, m.warnings, "ability");
    m.trigger = fit_classifier(train, schema_default(), LabelKind::trigger, params, threads, m.warnings, "trigger");
    m.behaviour = fit_classifier(train, mat_schema(train.patient_ids()), LabelKind::behaviour, params, threads,
                                 m.warnings, "behaviour");
    return m;
}

Classifier oracle_behaviour_classifier(const FeatureSchema& schema, int action_threshold) {
    return Classifier::from_function(schema, {0, 1}, [schema, action_threshold](std::span<const int> row) {
        Sample s;
        apply_row(schema, row, s);
        return one_hot({0, 1}, behaviour(compute_mat(s), action_threshold));
    });
}

TwoStepModel oracle_two_step(const std::map<int, int>& thresholds) {
    TwoStepModel m;
    const std::vector<int> scores = {0, 1, 2, 3, 4};
    const auto schema = schema_default();
    auto dim_oracle = [&](std::size_t dim) {
        return Classifier::from_function(schema, scores, [schema, scores, dim](std::span<const int> row) {
            Sample s;
            apply_row(schema, row, s);
            return one_hot(scores, mat_component(compute_mat(s), dim));
        });
    };
    m.motivation = dim_oracle(0);
    m.ability = dim_oracle(1);
    m.trigger = dim_oracle(2);
    std::vector<int> ids;
    for (const auto& [id, _] : thresholds) ids.push_back(id);
    m.behaviour = Classifier::from_function(mat_schema(ids), {0, 1}, [thresholds](std::span<const int> row) {
        auto it = thresholds.find(row[3]);
        const int threshold = it == thresholds.end() ? kThresholdMax : it->second;
        return one_hot({0, 1}, behaviour(MatVector{row[0], row[1], row[2]}, threshold));
    });
    return m;
}

std::optional<Counterfactual> personalize_direct(const DirectModel& model, const Sample& instance,
                                                 const GaParams& ga, int k_diverse) {
    auto constraints = bci_constraints(model.classifier.schema(), 1);
    constraints.k_diverse = k_diverse;
    auto candidates = generate(model.classifier, instance, constraints, ga);
    if (candidates.empty()) return std::nullopt;
    return select_minimal(candidates);
}

std::optional<TwoStepPersonalization> personalize_two_step(const TwoStepModel& model, const Sample& instance,
                                                           const GaParams& ga, int k_diverse) {
    const auto& schema = model.motivation.schema();
    const auto original = extract_row(schema, instance);

    TwoStepPersonalization out;
    out.current_mat = model.predict_mat(instance);
    const auto mat_row = model.behaviour_row(out.current_mat, instance.patient_id);

    // Pass 1: which MAT dimensions to move.
    CfConstraints mat_constraints;
    mat_constraints.mutable_features = {"mat_m", "mat_a", "mat_t"};
    mat_constraints.target_class = 1;
    mat_constraints.k_diverse = k_diverse;
    auto mat_candidates = generate(model.behaviour, mat_row, mat_constraints, ga);
    if (mat_candidates.empty()) return std::nullopt;
    const auto& chosen = select_minimal(mat_candidates);
    out.mat_target = MatVector{chosen.modified[0], chosen.modified[1], chosen.modified[2]};

    // Pass 2: BCI changes reaching each moved dimension.
    FeatureRow current = original;
    std::vector<std::pair<std::size_t, int>> reached;
    for (std::size_t dim = 0; dim < kMatFields.size(); ++dim) {
        const int target = mat_component(out.mat_target, dim);
        if (target == mat_component(out.current_mat, dim)) continue;
        const auto& clf = step1(model, dim);
        bool done = false;
        for (int value = target; value <= kScoreMax && !done; ++value) {
            if (clf.predict(current) == value) {
                reached.emplace_back(dim, value);
                done = true;
                break;
            }
            auto constraints = bci_constraints(schema, value);
            constraints.k_diverse = k_diverse;
            auto candidates = generate(clf, current, constraints, ga);
            std::erase_if(candidates, [&](const Counterfactual& c) {
                for (auto [d, v] : reached)
                    if (step1(model, d).predict(c.modified) != v) return true;
                return false;
            });
            if (candidates.empty()) continue;
            current = select_minimal(candidates).modified;
            reached.emplace_back(dim, value);
            done = true;
        }
        if (!done) return std::nullopt;
    }

    Sample revised = instance;
    apply_row(schema, current, revised);
    if (model.predict(revised) != 1) return std::nullopt;

    out.bci_change.original = original;
    out.bci_change.modified = current;
    for (std::size_t i = 0; i < current.size(); ++i)
        if (current[i] != original[i]) out.bci_change.changed_features.emplace_back(schema.features[i].name());
    out.bci_change.change_count = static_cast<int>(out.bci_change.changed_features.size());
    out.bci_change.probability =
        model.behaviour.probability_of(model.behaviour_row(model.predict_mat(revised), instance.patient_id), 1);
    return out;
}

nlohmann::json personalization_to_json(const Sample& instance, const Counterfactual& bci_change,
                                       const std::optional<MatVector>& mat_target) {
    FeatureSchema bci;
    for (Field f : bci_fields()) bci.features.push_back(describe(f));
    const auto original = extract_row(bci, instance);
    // The change rows use schema_default() order, optionally followed by
    // patient_id, so BCI positions are the same either way.
    const auto full = schema_default();
    auto revised_row = original;
    for (std::size_t i = 0; i < bci.size(); ++i)
        revised_row[i] = bci_change.modified.at(*full.index_of(bci.features[i].field));
    nlohmann::json j;
    j["original_bci"] = row_to_json(bci, original);
    j["revised_bci"] = row_to_json(bci, revised_row);
    if (mat_target)
        j["mat_target"] = {{"motivation", mat_target->motivation},
                           {"ability", mat_target->ability},
                           {"trigger", mat_target->trigger}};
    else
        j["mat_target"] = nullptr;
    j["changed_features"] = bci_change.changed_features;
    j["change_count"] = bci_change.change_count;
    return j;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

using nlohmann::json;

json classifier_to_json(const Classifier& c) {
    if (!c.forest()) throw ValidationError("only forest-backed classifiers can be saved");
    std::vector<int> ids;
    if (auto idx = c.schema().index_of(Field::patient_id)) ids = c.schema().features[*idx].ids;
    return json{{"features", c.schema().names()},
                {"patient_ids", ids},
                {"forest", json::parse(forest_to_json(*c.forest()))}};
}

Classifier classifier_from_json(const json& j) {
    auto names = j.at("features").get<std::vector<std::string>>();
    auto ids = j.at("patient_ids").get<std::vector<int>>();
    return Classifier::from_forest(resolve_schema(names, ids), forest_from_json(j.at("forest").dump()));
}

template <typename Fn>
auto guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace

json model_to_json(const DirectModel& model) {
    return json{{"kind", "direct"},
                {"include_patient_id", model.include_patient_id},
                {"behaviour", classifier_to_json(model.classifier)}};
}

json model_to_json(const TwoStepModel& model) {
    return json{{"kind", "two_step"},
                {"motivation", classifier_to_json(model.motivation)},
                {"ability", classifier_to_json(model.ability)},
                {"trigger", classifier_to_json(model.trigger)},
                {"behaviour", classifier_to_json(model.behaviour)}};
}

std::string model_kind(const json& j) {
    return guarded([&] { return j.at("kind").get<std::string>(); });
}

DirectModel direct_model_from_json(const json& j) {
    return guarded([&] {
        if (j.at("kind") != "direct") throw ValidationError("model is not a direct model");
        DirectModel m;
        m.include_patient_id = j.at("include_patient_id").get<bool>();
        m.classifier = classifier_from_json(j.at("behaviour"));
        return m;
    });
}

TwoStepModel two_step_model_from_json(const json& j) {
    return guarded([&] {
        if (j.at("kind") != "two_step") throw ValidationError("model is not a two-step model");
        TwoStepModel m;
        m.motivation = classifier_from_json(j.at("motivation"));
        m.ability = classifier_from_json(j.at("ability"));
        m.trigger = classifier_from_json(j.at("trigger"));
        m.behaviour = classifier_from_json(j.at("behaviour"));
        return m;
    });
}

Sample sample_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("instance must be a JSON object");
    auto schema = with_identifier(schema_default(), {});
    for (const auto& [key, _] : j.items())
        if (!schema.index_of(key)) throw SchemaViolation(key, "unknown instance key");
    Sample s;
    for (const auto& d : schema.features) {
        const std::string name(d.name());
        if (!j.contains(name)) throw SchemaViolation(name, "missing");
        const auto& v = j.at(name);
        std::optional<int> raw;
        if (d.kind == FeatureKind::nominal && v.is_string()) raw = d.parse_token(v.get<std::string>());
        else if (d.kind == FeatureKind::identifier && v.is_number_integer() && v.get<int>() >= 0) raw = v.get<int>();
        else if (d.kind == FeatureKind::ordinal && v.is_number_integer() && d.contains(v.get<int>())) raw = v.get<int>();
        if (!raw) throw SchemaViolation(name, "invalid value " + v.dump());
        set_field(s, d.field, *raw);
    }
    validate(s);
    return s;
}

json sample_to_json(const Sample& s) {
    auto schema = with_identifier(schema_default(), std::vector<int>{s.patient_id});
    return row_to_json(schema, extract_row(schema, s));
}

}  // namespace bcip
