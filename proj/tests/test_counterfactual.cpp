#include <doctest.h>

#include <algorithm>
#include <set>

#include "bcip/counterfactual.hpp"
#include "bcip/pipeline.hpp"
#include "bcip/simulator.hpp"

using namespace bcip;

namespace {

// m_enroll 2, affect 2, reminder only: M = 2.
Sample base_instance() {
    Sample s;
    s.traits = {50, Gender::female, 2};
    s.context = {2, 2, Motion::stationary, Location::home, TimeOfDay::morning, DayOfWeek::tue};
    s.bci = {ActivityType::walk, 2, DeliverySchedule::fixed_morning, MessagePhrasing::neutral,
             MessageContent::reminder_only};
    return s;
}

// Walk at the heaviest dose: A = 0. Dose 2 gives (2, 2, 3), product 12.
Sample heavy_walk() {
    auto s = base_instance();
    s.bci.dose = 4;
    return s;
}

// (2, 1, 2): dose 3 and an off-schedule reminder.
Sample product_four() {
    auto s = base_instance();
    s.bci.dose = 3;
    s.context.time_of_day = TimeOfDay::afternoon;
    return s;
}

Counterfactual candidate(std::vector<std::string> changed, double p, std::vector<int> original = {0},
                         std::vector<int> modified = {0}) {
    Counterfactual c;
    c.changed_features = std::move(changed);
    c.change_count = static_cast<int>(c.changed_features.size());
    c.probability = p;
    c.original = std::move(original);
    c.modified = std::move(modified);
    return c;
}

void check_feature_control(const FeatureSchema& schema, const Counterfactual& cf) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema.features[i].mutability != Mutability::mutable_bci) CHECK(cf.modified[i] == cf.original[i]);
    }
    int diff = 0;
    for (std::size_t i = 0; i < schema.size(); ++i) diff += cf.modified[i] != cf.original[i];
    CHECK(diff == cf.change_count);
}

}  // namespace

TEST_CASE("reference instances have the intended MAT") {
    CHECK(compute_mat(heavy_walk()) == MatVector{2, 0, 3});
    CHECK(compute_mat(product_four()) == MatVector{2, 1, 2});
}

TEST_CASE("an instance already at the target yields one zero-change entry") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    auto s = base_instance();
    s.bci.dose = 0;  // (2, 4, 3) = 24
    const auto out = generate(model, s, bci_constraints(schema), GaParams{});
    REQUIRE(out.size() == 1);
    CHECK(out[0].change_count == 0);
    CHECK(out[0].modified == out[0].original);
    CHECK(out[0].probability == 1.0);
}

TEST_CASE("lighter dose keeps the walk") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    const auto s = heavy_walk();
    REQUIRE(model.predict(extract_row(schema, s)) == 0);
    const auto out = generate(model, s, bci_constraints(schema), GaParams{});
    REQUIRE_FALSE(out.empty());
    CHECK(std::any_of(out.begin(), out.end(), [](const Counterfactual& c) {
        return c.changed_features == std::vector<std::string>{"dose"};
    }));
    const auto& best = select_minimal(out);
    CHECK(best.changed_features == std::vector<std::string>{"dose"});
    // Equal probability and names: the smallest move, dose 4 -> 2.
    CHECK(best.modified[*schema.index_of(Field::dose)] == 2);
    CHECK(best.modified[*schema.index_of(Field::activity_type)] == static_cast<int>(ActivityType::walk));
}

TEST_CASE("product-four instance: every candidate flips the rule through BCI only") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    const auto s = product_four();
    const auto cons = bci_constraints(schema);
    const auto out = generate(model, s, cons, GaParams{});
    REQUIRE_FALSE(out.empty());
    CHECK(out.size() <= 4);
    std::set<std::vector<std::string>> sets;
    for (const auto& cf : out) {
        Sample t = s;
        apply_row(schema, cf.modified, t);
        CHECK(compute_mat(t).product() > 10);
        check_feature_control(schema, cf);
        sets.insert(cf.changed_features);
    }
    CHECK(sets.size() == out.size());

    // Content -> ability_planning with context_triggered reaches (2, 2, 3) = 12;
    // a dose change alone is shorter.
    auto two = extract_row(schema, s);
    two[*schema.index_of(Field::message_content)] = static_cast<int>(MessageContent::ability_planning);
    two[*schema.index_of(Field::delivery_schedule)] = static_cast<int>(DeliverySchedule::context_triggered);
    CHECK(model.predict(two) == 1);
    const auto oracle = exhaustive_counterfactual(model, extract_row(schema, s), cons, 5);
    REQUIRE(oracle);
    CHECK(oracle->change_count == 1);
    CHECK(oracle->changed_features == std::vector<std::string>{"dose"});
    CHECK(select_minimal(out).change_count == 1);
}

TEST_CASE("select_minimal ordering") {
    const std::vector<Counterfactual> counts = {candidate({"a", "b", "c"}, 0.9), candidate({"dose"}, 0.6),
                                                candidate({"a", "b"}, 0.99)};
    CHECK(select_minimal(counts).changed_features == std::vector<std::string>{"dose"});

    const std::vector<Counterfactual> probs = {candidate({"dose"}, 0.6), candidate({"message_content"}, 0.9)};
    CHECK(select_minimal(probs).probability == 0.9);

    const std::vector<Counterfactual> names = {candidate({"message_content"}, 0.7), candidate({"dose"}, 0.7)};
    CHECK(select_minimal(names).changed_features == std::vector<std::string>{"dose"});

    const std::vector<Counterfactual> delta = {candidate({"dose"}, 0.7, {4}, {0}), candidate({"dose"}, 0.7, {4}, {3})};
    CHECK(select_minimal(delta).modified == std::vector<int>{3});

    const std::vector<Counterfactual> one = {candidate({"x"}, 0.5)};
    CHECK(&select_minimal(one) == &one[0]);

    const std::vector<Counterfactual> none;
    CHECK_THROWS_WITH_AS(select_minimal(none), "no counterfactual", std::invalid_argument);
}

TEST_CASE("threshold 64 has no counterfactual") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 64);
    const auto row = extract_row(schema, base_instance());
    const auto cons = bci_constraints(schema);
    CHECK_FALSE(exhaustive_counterfactual(model, row, cons, 5));
    CHECK(generate(model, row, cons, GaParams{}).empty());
}

TEST_CASE("GA never beats the exhaustive minimum and usually matches it") {
    const auto schema = schema_default();
    const auto cons = bci_constraints(schema);
    Rng rng(77);
    int solvable = 0, found = 0, matched = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int threshold = rng.uniform_int(0, 40);
        const auto model = oracle_behaviour_classifier(schema, threshold);
        Sample s;
        s.traits = {rng.uniform_int(18, 90), static_cast<Gender>(rng.uniform_int(0, 2)), rng.uniform_int(0, 4)};
        s.context = sample_context(rng);
        s.bci = sample_bci(rng);
        const auto row = extract_row(schema, s);
        if (model.predict(row) == 1) continue;
        const auto oracle = exhaustive_counterfactual(model, row, cons, 5);
        if (!oracle) continue;
        ++solvable;
        GaParams ga;
        ga.seed = static_cast<std::uint64_t>(trial);
        const auto out = generate(model, row, cons, ga);
        if (out.empty()) continue;
        ++found;
        const auto& best = select_minimal(out);
        CHECK(best.change_count >= oracle->change_count);
        matched += best.change_count == oracle->change_count;
        for (const auto& cf : out) {
            CHECK(model.predict(cf.modified) == 1);
            check_feature_control(schema, cf);
        }
    }
    REQUIRE(solvable > 10);
    CHECK(found == solvable);
    CHECK(matched >= (9 * solvable) / 10);
}

TEST_CASE("same seed, same candidates") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 20);
    const auto row = extract_row(schema, product_four());
    GaParams ga;
    ga.seed = 5;
    const auto a = generate(model, row, bci_constraints(schema), ga);
    CHECK(generate(model, row, bci_constraints(schema), ga) == a);
}

TEST_CASE("allowed domains restrict the search") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    const auto row = extract_row(schema, heavy_walk());
    auto cons = bci_constraints(schema);
    cons.allowed["dose"] = {3, 4};
    for (const auto& cf : generate(model, row, cons, GaParams{})) {
        const int dose = cf.modified[*schema.index_of(Field::dose)];
        CHECK((dose == 3 || dose == 4));
    }
    const auto oracle = exhaustive_counterfactual(model, row, cons, 5);
    REQUIRE(oracle);
    CHECK(oracle->modified[*schema.index_of(Field::dose)] >= 3);
}

TEST_CASE("constraint errors") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    const auto row = extract_row(schema, heavy_walk());

    CfConstraints empty;
    CHECK_THROWS_AS(generate(model, row, empty, GaParams{}), ConstraintError);

    auto immutable = bci_constraints(schema);
    immutable.mutable_features.push_back("affect");
    CHECK_THROWS_AS(generate(model, row, immutable, GaParams{}), ConstraintError);

    auto unknown = bci_constraints(schema);
    unknown.mutable_features.push_back("mat_m");
    CHECK_THROWS_AS(generate(model, row, unknown, GaParams{}), ConstraintError);

    auto outside = bci_constraints(schema);
    outside.allowed["dose"] = {7};
    CHECK_THROWS_AS(generate(model, row, outside, GaParams{}), ConstraintError);

    auto not_mutable = bci_constraints(schema);
    not_mutable.allowed["age"] = {30};
    CHECK_THROWS_AS(generate(model, row, not_mutable, GaParams{}), ConstraintError);

    GaParams small;
    small.population_size = 2;
    small.elitism = 1;
    CHECK_THROWS_AS(generate(model, row, bci_constraints(schema), small), ConstraintError);

    GaParams bad;
    bad.mutation_rate = 1.5;
    CHECK_THROWS_AS(generate(model, row, bci_constraints(schema), bad), ValidationError);

    CHECK_THROWS_AS(exhaustive_counterfactual(model, row, bci_constraints(schema), 5, 100), ConstraintError);
}

TEST_CASE("JSON record") {
    const auto schema = schema_default();
    const auto model = oracle_behaviour_classifier(schema, 10);
    const auto cf = *exhaustive_counterfactual(model, extract_row(schema, heavy_walk()), bci_constraints(schema), 5);
    const auto j = counterfactual_to_json(schema, cf);
    CHECK(j.at("original").at("dose") == 4);
    CHECK(j.at("modified").at("activity_type") == "walk");
    CHECK(j.at("changed_features") == nlohmann::json::array({"dose"}));
    CHECK(j.at("probability") == 1.0);
}
