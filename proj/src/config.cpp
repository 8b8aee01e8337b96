#include "bcip/config.hpp"

#include <fstream>
#include <set>

namespace bcip {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ValidationError(std::string(section) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError(std::string(section) + "." + key + ": unknown key");
    }
}

template <typename T>
void read(const json& j, std::string_view section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string(section) + "." + key + ": wrong type");
    }
}

// Integers must be JSON integers, not floats.
void read_int(const json& j, std::string_view section, const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) throw ValidationError(std::string(section) + "." + key + ": expected an integer");
    read(j, section, key, out);
}

void read_seed(const json& j, std::string_view section, const char* key, std::uint64_t& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_unsigned() && !(j.at(key).is_number_integer() && j.at(key).get<std::int64_t>() >= 0))
        throw ValidationError(std::string(section) + "." + key + ": expected a non-negative integer");
    out = j.at(key).get<std::uint64_t>();
}

void wrap(std::string_view key, auto&& fn) {
    try {
        fn();
    } catch (const SchemaViolation&) {
        throw;
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(key) + ": " + e.what());
    }
}

CohortConfig parse_cohort(const json& j) {
    check_keys(j, "cohort", {"n_patients", "threshold_policy", "samples_per_patient", "seed"});
    CohortConfig c;
    read_int(j, "cohort", "n_patients", c.n_patients);
    read_int(j, "cohort", "samples_per_patient", c.samples_per_patient);
    read_seed(j, "cohort", "seed", c.seed);
    if (j.contains("threshold_policy")) {
        const auto& p = j.at("threshold_policy");
        if (!p.is_object() || !p.contains("type") || !p.at("type").is_string())
            throw ValidationError("cohort.threshold_policy.type: missing");
        const auto type = p.at("type").get<std::string>();
        if (type == "fixed") {
            check_keys(p, "cohort.threshold_policy", {"type", "value"});
            FixedThreshold f;
            read_int(p, "cohort.threshold_policy", "value", f.value);
            c.threshold_policy = f;
        } else if (type == "uniform") {
            check_keys(p, "cohort.threshold_policy", {"type"});
            c.threshold_policy = UniformThreshold{};
        } else if (type == "stratified") {
            check_keys(p, "cohort.threshold_policy", {"type", "fraction_below_40"});
            StratifiedThreshold s;
            read(p, "cohort.threshold_policy", "fraction_below_40", s.fraction_below_40);
            c.threshold_policy = s;
        } else {
            throw ValidationError("cohort.threshold_policy.type: unknown policy '" + type + "'");
        }
    }
    wrap("cohort", [&] { validate(c); });
    return c;
}

ForestParams parse_forest(const json& j) {
    check_keys(j, "forest",
               {"n_trees", "max_features", "min_samples_split", "max_depth", "bootstrap", "class_weighting", "seed"});
    ForestParams p;
    read_int(j, "forest", "n_trees", p.n_trees);
    read_int(j, "forest", "min_samples_split", p.min_samples_split);
    read(j, "forest", "bootstrap", p.bootstrap);
    read_seed(j, "forest", "seed", p.seed);
    if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
        int d = 0;
        read_int(j, "forest", "max_depth", d);
        p.max_depth = d;
    }
    if (j.contains("max_features")) {
        std::string v;
        read(j, "forest", "max_features", v);
        if (v == "sqrt") p.max_features = MaxFeatures::sqrt;
        else if (v == "all") p.max_features = MaxFeatures::all;
        else throw ValidationError("forest.max_features: expected sqrt or all");
    }
    if (j.contains("class_weighting")) {
        std::string v;
        read(j, "forest", "class_weighting", v);
        if (v == "balanced") p.class_weighting = ClassWeighting::balanced;
        else if (v == "none") p.class_weighting = ClassWeighting::none;
        else throw ValidationError("forest.class_weighting: expected balanced or none");
    }
    wrap("forest", [&] { validate(p); });
    return p;
}

void parse_ga(const json& j, GaParams& p, int& k) {
    check_keys(j, "ga",
               {"population_size", "generations", "mutation_rate", "crossover_rate", "elitism", "sparsity_weight",
                "seed", "k_diverse"});
    read_int(j, "ga", "population_size", p.population_size);
    read_int(j, "ga", "generations", p.generations);
    read(j, "ga", "mutation_rate", p.mutation_rate);
    read(j, "ga", "crossover_rate", p.crossover_rate);
    read_int(j, "ga", "elitism", p.elitism);
    read(j, "ga", "sparsity_weight", p.sparsity_weight);
    read_seed(j, "ga", "seed", p.seed);
    read_int(j, "ga", "k_diverse", k);
    wrap("ga", [&] { validate(p); });
    if (k < 1) throw ValidationError("ga.k_diverse: must be >= 1");
    if (p.population_size < k) throw ValidationError("ga.population_size: must be >= k_diverse");
}

void check_experiment(const json& j) {
    check_keys(j, "experiment",
               {"thresholds", "patient_counts", "fractions_below_40", "train_sizes", "test_size", "repetitions",
                "master_seed"});
}

}  // namespace

ExperimentConfig RunConfig::experiment_config(ExperimentId id) const {
    auto c = ExperimentConfig::defaults(id);
    const auto& j = experiment;
    read(j, "experiment", "thresholds", c.thresholds);
    read(j, "experiment", "patient_counts", c.patient_counts);
    read(j, "experiment", "fractions_below_40", c.fractions_below_40);
    read(j, "experiment", "train_sizes", c.train_sizes);
    read_int(j, "experiment", "test_size", c.test_size);
    read_int(j, "experiment", "repetitions", c.repetitions);
    read_seed(j, "experiment", "master_seed", c.master_seed);
    c.forest = forest;
    wrap("experiment", [&] { validate(c); });
    return c;
}

RunConfig parse_run_config(const json& j) {
    check_keys(j, "config", {"cohort", "forest", "ga", "train", "experiment"});
    RunConfig c;
    if (j.contains("cohort")) c.cohort = parse_cohort(j.at("cohort"));
    if (j.contains("forest")) c.forest = parse_forest(j.at("forest"));
    if (j.contains("ga")) parse_ga(j.at("ga"), c.ga, c.k_diverse);
    if (j.contains("train")) {
        check_keys(j.at("train"), "train", {"include_patient_id"});
        read(j.at("train"), "train", "include_patient_id", c.include_patient_id);
    }
    if (j.contains("experiment")) {
        check_experiment(j.at("experiment"));
        c.experiment = j.at("experiment");
        // Validate eagerly against every experiment the keys could apply to.
        for (auto id : {ExperimentId::threshold_sweep, ExperimentId::multi_patient, ExperimentId::supervision})
            (void)c.experiment_config(id);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_run_config(j);
}

}  // namespace bcip
