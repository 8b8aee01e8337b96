#include "bcip/counterfactual.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include "bcip/rng.hpp"

namespace bcip {

namespace {

struct MutableSlot {
    std::size_t index = 0;     // position in the schema
    std::vector<int> values;   // allowed values, ascending
};

std::vector<MutableSlot> resolve(const FeatureSchema& schema, const CfConstraints& c) {
    if (c.mutable_features.empty()) throw ConstraintError("mutable feature set is empty");
    if (c.k_diverse < 1) throw ConstraintError("k_diverse must be >= 1");
    for (const auto& [name, _] : c.allowed) {
        if (std::find(c.mutable_features.begin(), c.mutable_features.end(), name) == c.mutable_features.end())
            throw ConstraintError("allowed domain given for non-mutable feature " + name);
    }
    std::vector<MutableSlot> slots;
    for (const auto& name : c.mutable_features) {
        auto idx = schema.index_of(name);
        if (!idx) throw ConstraintError("mutable feature " + name + " is not in the schema");
        const auto& d = schema.features[*idx];
        if (d.mutability == Mutability::immutable) throw ConstraintError("feature " + name + " is immutable");
        MutableSlot slot{*idx, d.domain()};
        if (auto it = c.allowed.find(name); it != c.allowed.end()) {
            for (int v : it->second)
                if (!d.contains(v)) throw ConstraintError("allowed value " + std::to_string(v) + " outside domain of " + name);
            slot.values = it->second;
            std::sort(slot.values.begin(), slot.values.end());
            slot.values.erase(std::unique(slot.values.begin(), slot.values.end()), slot.values.end());
        }
        if (std::any_of(slots.begin(), slots.end(), [&](const MutableSlot& s) { return s.index == *idx; }))
            throw ConstraintError("duplicate mutable feature " + name);
        slots.push_back(std::move(slot));
    }
    std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return slots;
}

Counterfactual make_cf(const Classifier& model, std::span<const int> instance, FeatureRow modified, int target) {
    Counterfactual cf;
    cf.original.assign(instance.begin(), instance.end());
    for (std::size_t i = 0; i < modified.size(); ++i)
        if (modified[i] != instance[i]) cf.changed_features.emplace_back(model.schema().features[i].name());
    cf.change_count = static_cast<int>(cf.changed_features.size());
    cf.probability = model.probability_of(modified, target);
    cf.modified = std::move(modified);
    return cf;
}

int value_delta(const Counterfactual& c) {
    int d = 0;
    for (std::size_t i = 0; i < c.modified.size(); ++i) d += std::abs(c.modified[i] - c.original[i]);
    return d;
}

using Genome = std::vector<int>;

struct Evaluation {
    double probability = 0.0;
    double fitness = 0.0;
    int changes = 0;
    int delta = 0;  // summed |value - original|
    bool valid = false;
};

class GeneticSearch {
public:
    GeneticSearch(const Classifier& model, std::span<const int> instance, std::vector<MutableSlot> slots,
                  int target, const GaParams& params)
        : model_(model), instance_(instance.begin(), instance.end()), slots_(std::move(slots)), target_(target),
          params_(params), rng_(params.seed) {
        for (const auto& s : slots_) original_.push_back(instance_[s.index]);
    }

    /// Every valid genome met during the run with its evaluation.
    std::vector<std::pair<Genome, Evaluation>> run() {
        std::vector<Genome> population;
        population.reserve(static_cast<std::size_t>(params_.population_size));
        for (int i = 0; i < params_.population_size; ++i) population.push_back(random_sparse());
        for (const auto& g : population) evaluate(g);

        for (int gen = 0; gen < params_.generations; ++gen) {
            rank(population);
            std::vector<Genome> next(population.begin(), population.begin() + std::min<std::ptrdiff_t>(params_.elitism, static_cast<std::ptrdiff_t>(population.size())));
            std::set<Genome> members(next.begin(), next.end());
            while (next.size() < population.size()) {
                const Genome& a = tournament(population);
                const Genome& b = tournament(population);
                Genome child = crossover(a, b);
                mutate(child);
                // A duplicate is replaced by a fresh sparse genome so a flat
                // fitness landscape cannot collapse the population.
                if (members.count(child)) child = random_sparse();
                evaluate(child);
                members.insert(child);
                next.push_back(std::move(child));
            }
            population = std::move(next);
        }

        std::vector<std::pair<Genome, Evaluation>> valid;
        for (const auto& [g, e] : cache_)
            if (e.valid && e.changes > 0) valid.emplace_back(g, e);
        return valid;
    }

    FeatureRow express(const Genome& g) const {
        FeatureRow row = instance_;
        for (std::size_t i = 0; i < slots_.size(); ++i) row[slots_[i].index] = g[i];
        return row;
    }

private:
    int random_other(std::size_t slot) {
        const auto& vals = slots_[slot].values;
        std::vector<int> others;
        for (int v : vals)
            if (v != original_[slot]) others.push_back(v);
        if (others.empty()) return original_[slot];
        return others[rng_.index(others.size())];
    }

    Genome random_sparse() {
        Genome g = original_;
        std::vector<std::size_t> order(slots_.size());
        std::iota(order.begin(), order.end(), 0);
        rng_.shuffle(order.begin(), order.end());
        const auto n_changes = static_cast<std::size_t>(rng_.uniform_int(1, static_cast<int>(slots_.size())));
        for (std::size_t i = 0; i < n_changes; ++i) g[order[i]] = random_other(order[i]);
        return g;
    }

    const Evaluation& evaluate(const Genome& g) {
        if (auto it = cache_.find(g); it != cache_.end()) return it->second;
        const auto row = express(g);
        const auto proba = model_.predict_proba(row);
        Evaluation e;
        const auto& cls = model_.classes();
        auto it = std::lower_bound(cls.begin(), cls.end(), target_);
        if (it != cls.end() && *it == target_) e.probability = proba[static_cast<std::size_t>(it - cls.begin())];
        e.valid = cls[argmax(proba)] == target_;
        for (std::size_t i = 0; i < g.size(); ++i) {
            e.changes += g[i] != original_[i] ? 1 : 0;
            e.delta += std::abs(g[i] - original_[i]);
        }
        e.fitness = e.probability - params_.sparsity_weight * static_cast<double>(e.changes) /
                                        static_cast<double>(slots_.size());
        return cache_.emplace(g, e).first->second;
    }

    bool better(const Genome& a, const Genome& b) {
        const auto& ea = cache_.at(a);
        const auto& eb = cache_.at(b);
        if (ea.fitness != eb.fitness) return ea.fitness > eb.fitness;
        if (ea.changes != eb.changes) return ea.changes < eb.changes;
        return a < b;
    }

    void rank(std::vector<Genome>& pop) {
        std::sort(pop.begin(), pop.end(), [this](const Genome& a, const Genome& b) { return better(a, b); });
    }

    const Genome& tournament(const std::vector<Genome>& pop) {
        const auto& a = pop[rng_.index(pop.size())];
        const auto& b = pop[rng_.index(pop.size())];
        return better(a, b) ? a : b;
    }

    Genome crossover(const Genome& a, const Genome& b) {
        Genome child = a;
        for (std::size_t i = 0; i < child.size(); ++i)
            if (rng_.bernoulli(params_.crossover_rate)) child[i] = b[i];
        return child;
    }

    void mutate(Genome& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!rng_.bernoulli(params_.mutation_rate)) continue;
            if (rng_.bernoulli(0.5)) {
                g[i] = original_[i];
            } else {
                const auto& vals = slots_[i].values;
                g[i] = vals[rng_.index(vals.size())];
            }
        }
    }

    const Classifier& model_;
    FeatureRow instance_;
    std::vector<MutableSlot> slots_;
    Genome original_;
    int target_;
    const GaParams& params_;
    Rng rng_;
    std::map<Genome, Evaluation> cache_;
};

}  // namespace

CfConstraints bci_constraints(const FeatureSchema& schema, int target_class) {
    CfConstraints c;
    c.target_class = target_class;
    for (Field f : bci_fields())
        if (schema.index_of(f)) c.mutable_features.emplace_back(field_name(f));
    return c;
}

void validate(const GaParams& p) {
    if (p.population_size < 1) throw ValidationError("population_size must be >= 1");
    if (p.generations < 0) throw ValidationError("generations must be >= 0");
    if (p.elitism < 0 || p.elitism > p.population_size) throw ValidationError("elitism must be in [0, population_size]");
    auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate(p.mutation_rate) || !rate(p.crossover_rate)) throw ValidationError("rates must be in [0, 1]");
    if (p.sparsity_weight < 0.0) throw ValidationError("sparsity_weight must be >= 0");
}

std::vector<Counterfactual> generate(const Classifier& model, std::span<const int> instance,
                                     const CfConstraints& constraints, const GaParams& params) {
    validate(params);
    auto slots = resolve(model.schema(), constraints);
    if (params.population_size < constraints.k_diverse)
        throw ConstraintError("population_size must be >= k_diverse");
    if (instance.size() != model.schema().size()) throw ValidationError("instance width does not match schema");

    if (model.predict(instance) == constraints.target_class)
        return {make_cf(model, instance, FeatureRow(instance.begin(), instance.end()), constraints.target_class)};

    GeneticSearch search(model, instance, std::move(slots), constraints.target_class, params);
    auto valid = search.run();
    std::sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) {
        if (a.second.fitness != b.second.fitness) return a.second.fitness > b.second.fitness;
        if (a.second.changes != b.second.changes) return a.second.changes < b.second.changes;
        if (a.second.delta != b.second.delta) return a.second.delta < b.second.delta;
        return a.first < b.first;
    });

    std::vector<Counterfactual> out;
    std::set<std::vector<std::string>> seen;
    for (const auto& [genome, eval] : valid) {
        auto cf = make_cf(model, instance, search.express(genome), constraints.target_class);
        if (!seen.insert(cf.changed_features).second) continue;
        out.push_back(std::move(cf));
        if (static_cast<int>(out.size()) == constraints.k_diverse) break;
    }
    return out;
}

std::vector<Counterfactual> generate(const Classifier& model, const Sample& instance, const CfConstraints& constraints,
                                     const GaParams& params) {
    return generate(model, extract_row(model.schema(), instance), constraints, params);
}

const Counterfactual& select_minimal(std::span<const Counterfactual> candidates) {
    if (candidates.empty()) throw std::invalid_argument("no counterfactual");
    auto before = [](const Counterfactual& a, const Counterfactual& b) {
        if (a.change_count != b.change_count) return a.change_count < b.change_count;
        if (a.probability != b.probability) return a.probability > b.probability;
        if (a.changed_features != b.changed_features) return a.changed_features < b.changed_features;
        return value_delta(a) < value_delta(b);
    };
    return *std::min_element(candidates.begin(), candidates.end(), before);
}

std::optional<Counterfactual> exhaustive_counterfactual(const Classifier& model, std::span<const int> instance,
                                                        const CfConstraints& constraints, int max_changes,
                                                        std::uint64_t cap) {
    auto slots = resolve(model.schema(), constraints);
    if (instance.size() != model.schema().size()) throw ValidationError("instance width does not match schema");
    std::uint64_t grid = 1;
    for (const auto& s : slots) {
        grid *= s.values.size() + 1;
        if (grid > cap) throw ConstraintError("mutable grid exceeds the enumeration cap");
    }
    const int target = constraints.target_class;
    if (model.predict(instance) == target)
        return make_cf(model, instance, FeatureRow(instance.begin(), instance.end()), target);

    // Per slot, the values that differ from the instance.
    std::vector<std::vector<int>> alternatives;
    for (const auto& s : slots) {
        std::vector<int> alt;
        for (int v : s.values)
            if (v != instance[s.index]) alt.push_back(v);
        alternatives.push_back(std::move(alt));
    }

    const int m = static_cast<int>(slots.size());
    for (int size = 1; size <= std::min(max_changes, m); ++size) {
        // Subsets of `size` slots in lexicographic order.
        std::vector<int> pick(static_cast<std::size_t>(size));
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            std::vector<std::size_t> digit(pick.size(), 0);
            bool feasible = std::all_of(pick.begin(), pick.end(),
                                        [&](int p) { return !alternatives[static_cast<std::size_t>(p)].empty(); });
            while (feasible) {
                FeatureRow row(instance.begin(), instance.end());
                for (std::size_t j = 0; j < pick.size(); ++j) {
                    const auto slot = static_cast<std::size_t>(pick[j]);
                    row[slots[slot].index] = alternatives[slot][digit[j]];
                }
                if (model.predict(row) == target) return make_cf(model, instance, std::move(row), target);
                // Odometer, last position fastest.
                std::size_t j = pick.size();
                while (j > 0) {
                    --j;
                    if (++digit[j] < alternatives[static_cast<std::size_t>(pick[j])].size()) break;
                    digit[j] = 0;
                    if (j == 0) feasible = false;
                }
            }
            // Next combination.
            int i = size - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - size + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < size; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return std::nullopt;
}

nlohmann::json row_to_json(const FeatureSchema& schema, std::span<const int> row) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& d = schema.features[i];
        if (d.kind == FeatureKind::nominal)
            j[std::string(d.name())] = d.token(row[i]);
        else
            j[std::string(d.name())] = row[i];
    }
    return j;
}

nlohmann::json counterfactual_to_json(const FeatureSchema& schema, const Counterfactual& cf) {
    nlohmann::json j;
    j["original"] = row_to_json(schema, cf.original);
    j["modified"] = row_to_json(schema, cf.modified);
    j["changed_features"] = cf.changed_features;
    j["change_count"] = cf.change_count;
    j["probability"] = cf.probability;
    return j;
}

}  // namespace bcip
