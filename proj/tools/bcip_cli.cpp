// bcip: simulate patients, train behaviour models, personalise interventions
// and run the simulation studies.
//
// Exit codes: 0 success, 1 runtime failure, 2 validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcip/config.hpp"
#include "bcip/dataset.hpp"
#include "bcip/experiments.hpp"
#include "bcip/pipeline.hpp"
#include "bcip/simulator.hpp"

namespace {

using namespace bcip;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    std::string data;
    std::string model;
    std::string instance;
    std::string mode = "direct";
    std::string experiment;
};

RunConfig load(const Options& o) {
    return o.config.empty() ? parse_run_config(json::object()) : load_run_config(o.config);
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

void log(const std::string& line) { std::cerr << line << '\n'; }

double positive_fraction(const Dataset& d) {
    std::size_t pos = 0;
    for (const auto& s : d.rows) pos += s.behaviour == 1;
    return d.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(d.size());
}

int cmd_simulate(const Options& o) {
    auto cfg = load(o);
    if (o.seed) cfg.cohort.seed = *o.seed;
    if (o.out.empty()) throw ValidationError("--out is required");
    const auto data = generate_dataset(cfg.cohort, o.threads);
    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_csv(data, out);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", positive_fraction(data));
    std::cout << "rows " << data.size() << "\npositive_fraction " << buf << '\n';
    return 0;
}

json train_model(const RunConfig& cfg, const Dataset& data, const std::string& mode, std::size_t threads) {
    if (mode == "direct") {
        auto m = train_direct(data, cfg.include_patient_id, cfg.forest, threads);
        for (const auto& w : m.warnings) log("warning: " + w);
        return model_to_json(m);
    }
    auto m = train_two_step(data, cfg.forest, threads);
    for (const auto& w : m.warnings) log("warning: " + w);
    return model_to_json(m);
}

int cmd_train(const Options& o) {
    auto cfg = load(o);
    if (o.seed) cfg.forest.seed = *o.seed;
    if (o.data.empty() || o.out.empty()) throw ValidationError("--data and --out are required");
    const auto data = read_csv(fs::path(o.data));
    write_text(o.out, train_model(cfg, data, o.mode, o.threads).dump() + "\n");
    std::cout << "trained " << o.mode << " model on " << data.size() << " rows\n";
    return 0;
}

int cmd_evaluate(const Options& o) {
    if (o.model.empty() || o.data.empty()) throw ValidationError("--model and --data are required");
    // Evaluation has no randomness; a config is still validated when given.
    if (!o.config.empty()) load(o);
    const auto mj = read_json(o.model);
    const auto data = read_csv(fs::path(o.data));
    std::vector<int> truth, pred;
    const auto kind = model_kind(mj);
    if (kind == "direct") {
        pred = direct_model_from_json(mj).predict(data.rows);
    } else if (kind == "two_step") {
        pred = two_step_model_from_json(mj).predict(data.rows);
    } else {
        throw ValidationError("unknown model kind " + kind);
    }
    for (const auto& s : data.rows) truth.push_back(s.behaviour);
    if (truth.empty()) throw ValidationError("evaluation data is empty");
    json r = {{"rows", truth.size()},
              {"macro_f1", macro_f1(truth, pred, std::vector<int>{0, 1})},
              {"accuracy", accuracy(truth, pred)}};
    const auto text = r.dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    std::cout << text;
    return 0;
}

int cmd_personalize(const Options& o) {
    auto cfg = load(o);
    if (o.seed) cfg.ga.seed = *o.seed;
    if (o.instance.empty()) throw ValidationError("--instance is required");
    if (o.mode != "direct" && o.mode != "two_step") throw ValidationError("--mode must be direct or two_step");
    const auto instance = sample_from_json(read_json(o.instance));

    json mj;
    if (!o.model.empty()) {
        mj = read_json(o.model);
    } else {
        // Inline: simulate the configured cohort and train on it.
        const auto data = generate_dataset(cfg.cohort, o.threads);
        mj = train_model(cfg, data, o.mode, o.threads);
    }

    json result;
    if (o.mode == "direct") {
        const auto model = direct_model_from_json(mj);
        if (auto cf = personalize_direct(model, instance, cfg.ga, cfg.k_diverse))
            result = personalization_to_json(instance, *cf, std::nullopt);
    } else {
        const auto model = two_step_model_from_json(mj);
        if (auto r = personalize_two_step(model, instance, cfg.ga, cfg.k_diverse))
            result = personalization_to_json(instance, r->bci_change, r->mat_target);
    }
    if (result.is_null()) log("no counterfactual: no BCI change within the search makes the model predict the behaviour");
    const auto text = result.dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    std::cout << text;
    return 0;
}

int cmd_experiment(const Options& o) {
    const auto id = experiment_from_name(o.experiment);
    if (!id) throw ValidationError("unknown experiment '" + o.experiment + "'");
    if (o.out.empty()) throw ValidationError("--out is required");
    const auto cfg = load(o);
    auto ec = cfg.experiment_config(*id);
    if (o.seed) ec.master_seed = *o.seed;
    ec.threads = o.threads;
    log("running " + o.experiment);
    const auto table = run_experiment(ec);
    for (const auto& p : write_outputs(table, *id, o.out)) std::cout << p.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Behaviour-change intervention personalisation toolkit"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration");
        sub->add_option("--seed", o.seed, "override the seed");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    };

    auto* simulate = app.add_subcommand("simulate", "simulate a cohort and write a CSV dataset");
    common(simulate);
    simulate->add_option("--out", o.out, "output CSV path")->required();

    auto* train = app.add_subcommand("train", "train a model on a CSV dataset");
    common(train);
    train->add_option("--data", o.data, "training CSV")->required();
    train->add_option("--mode", o.mode, "direct or two_step")->check(CLI::IsMember({"direct", "two_step"}));
    train->add_option("--out", o.out, "output model JSON")->required();

    auto* evaluate = app.add_subcommand("evaluate", "macro F1 and accuracy of a model on a CSV dataset");
    common(evaluate);
    evaluate->add_option("--model", o.model, "model JSON")->required();
    evaluate->add_option("--data", o.data, "evaluation CSV")->required();
    evaluate->add_option("--out", o.out, "write the metrics JSON here too");

    auto* personalize = app.add_subcommand("personalize", "minimal BCI change for one instance");
    common(personalize);
    personalize->add_option("--model", o.model, "model JSON (otherwise trained inline from --config)");
    personalize->add_option("--instance", o.instance, "instance JSON")->required();
    personalize->add_option("--mode", o.mode, "direct or two_step")->check(CLI::IsMember({"direct", "two_step"}));
    personalize->add_option("--out", o.out, "write the result JSON here too");

    auto* experiment = app.add_subcommand("experiment", "run threshold_sweep, multi_patient or supervision");
    common(experiment);
    experiment->add_option("id", o.experiment, "experiment id")->required();
    experiment->add_option("--out", o.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*train) return cmd_train(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*personalize) return cmd_personalize(o);
        if (*experiment) return cmd_experiment(o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
