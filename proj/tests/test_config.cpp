#include <doctest.h>

#include <string>

#include "bcip/config.hpp"

using namespace bcip;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
    try {
        parse_run_config(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
    const auto c = parse_run_config(json::object());
    CHECK(c.cohort.n_patients == 1);
    CHECK(c.cohort.samples_per_patient == 432);
    CHECK(std::holds_alternative<UniformThreshold>(c.cohort.threshold_policy));
    CHECK(c.forest == ForestParams{});
    CHECK(c.ga == GaParams{});
    CHECK(c.k_diverse == 4);
    CHECK_FALSE(c.include_patient_id);
    const auto e = c.experiment_config(ExperimentId::multi_patient);
    CHECK(e.train_sizes == std::vector<int>{30});
    CHECK(e.repetitions == 20);
    CHECK(e.test_size == 400);
}

TEST_CASE("every section is read") {
    const auto j = json::parse(R"({
        "cohort": {"n_patients": 10, "samples_per_patient": 50, "seed": 9,
                   "threshold_policy": {"type": "stratified", "fraction_below_40": 0.8}},
        "forest": {"n_trees": 7, "max_features": "all", "max_depth": 4, "bootstrap": false,
                   "class_weighting": "none", "seed": 3, "min_samples_split": 4},
        "ga": {"population_size": 20, "generations": 5, "seed": 2, "k_diverse": 3},
        "train": {"include_patient_id": true},
        "experiment": {"repetitions": 3, "train_sizes": [2, 4], "master_seed": 11}
    })");
    const auto c = parse_run_config(j);
    CHECK(c.cohort.n_patients == 10);
    CHECK(std::get<StratifiedThreshold>(c.cohort.threshold_policy).fraction_below_40 == 0.8);
    CHECK(c.forest.n_trees == 7);
    CHECK(c.forest.max_features == MaxFeatures::all);
    CHECK(c.forest.max_depth == 4);
    CHECK_FALSE(c.forest.bootstrap);
    CHECK(c.forest.class_weighting == ClassWeighting::none);
    CHECK(c.ga.population_size == 20);
    CHECK(c.k_diverse == 3);
    CHECK(c.include_patient_id);
    const auto e = c.experiment_config(ExperimentId::threshold_sweep);
    CHECK(e.repetitions == 3);
    CHECK(e.train_sizes == std::vector<int>{2, 4});
    CHECK(e.master_seed == 11);
    CHECK(e.forest == c.forest);
}

TEST_CASE("unknown keys are named") {
    CHECK(error_of(json{{"cohort", {{"foo", 1}}}}) == "cohort.foo: unknown key");
    CHECK(error_of(json{{"extra", 1}}) == "config.extra: unknown key");
    CHECK(error_of(json{{"forest", {{"trees", 1}}}}) == "forest.trees: unknown key");
}

TEST_CASE("out-of-range values are rejected") {
    CHECK(error_of(json{{"cohort", {{"n_patients", 0}}}}).find("cohort") == 0);
    CHECK(error_of(json{{"cohort", {{"threshold_policy", {{"type", "fixed"}, {"value", 70}}}}}}) != "");
    CHECK(error_of(json{{"cohort", {{"threshold_policy", {{"type", "weird"}}}}}}) != "");
    CHECK(error_of(json{{"forest", {{"n_trees", 1.5}}}}).find("forest.n_trees") == 0);
    CHECK(error_of(json{{"forest", {{"max_features", "log2"}}}}).find("forest.max_features") == 0);
    CHECK(error_of(json{{"ga", {{"mutation_rate", 2.0}}}}).find("ga") == 0);
    CHECK(error_of(json{{"ga", {{"population_size", 2}}}}) != "");
    CHECK(error_of(json{{"experiment", {{"train_sizes", {4, 2}}}}}).find("experiment") == 0);
    CHECK(error_of(json{{"cohort", {{"seed", -1}}}}).find("cohort.seed") == 0);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_run_config("/nonexistent/bcip.json"), ValidationError);
}
