#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "bcip/domain.hpp"

using namespace bcip;

TEST_CASE("default schema has the 14 observable features and no threshold") {
    const auto s = schema_default();
    CHECK(s.size() == 14);
    CHECK_FALSE(s.index_of(Field::patient_id));
    for (const auto& name : s.names()) CHECK(name.find("threshold") == std::string::npos);
    for (Field f : {Field::mat_m, Field::mat_a, Field::mat_t}) CHECK_FALSE(s.index_of(f));
}

TEST_CASE("BCI features are mutable, patient and context features are not") {
    const auto s = schema_default();
    const std::set<std::string> bci = {"activity_type", "dose", "delivery_schedule", "message_phrasing",
                                       "message_content"};
    for (const auto& d : s.features) {
        const bool is_bci = bci.count(std::string(d.name())) == 1;
        CHECK_MESSAGE((d.mutability == Mutability::mutable_bci) == is_bci, d.name());
    }
    CHECK(s.features[*s.index_of(Field::affect)].mutability == Mutability::immutable);
    CHECK(s.features[*s.index_of(Field::cognitive_load)].mutability == Mutability::immutable);
}

TEST_CASE("identifier and MAT schemas") {
    const std::vector<int> ids = {7, 3, 3, 5};
    const auto s = with_identifier(schema_default(), ids);
    REQUIRE(s.size() == 15);
    const auto& pid = s.features.back();
    CHECK(pid.kind == FeatureKind::identifier);
    CHECK(pid.mutability == Mutability::immutable);
    CHECK(pid.domain() == std::vector<int>{3, 5, 7});
    CHECK(pid.contains(5));
    CHECK_FALSE(pid.contains(4));

    const auto m = mat_schema(ids);
    CHECK(m.names() == std::vector<std::string>{"mat_m", "mat_a", "mat_t", "patient_id"});
    for (int i = 0; i < 3; ++i) CHECK(m.features[static_cast<std::size_t>(i)].mutability == Mutability::mutable_mat);
}

TEST_CASE("schema rebuilds from its names") {
    const std::vector<int> ids = {0, 1, 2};
    const auto s = with_identifier(schema_default(), ids);
    const auto names = s.names();
    CHECK(resolve_schema(names, ids) == s);
    const std::vector<std::string> bad = {"age", "shoe_size"};
    CHECK_THROWS_AS(resolve_schema(bad), SchemaViolation);
    const std::vector<std::string> dup = {"age", "age"};
    CHECK_THROWS_AS(resolve_schema(dup), SchemaViolation);
}

TEST_CASE("tokens round trip through every domain") {
    for (const auto& d : schema_default().features) {
        for (int v : d.domain()) {
            auto back = d.parse_token(d.token(v));
            REQUIRE(back);
            CHECK(*back == v);
        }
    }
    const auto motion = describe(Field::motion);
    CHECK(motion.token(1) == "walking");
    CHECK_FALSE(motion.parse_token("running"));
    const auto dose = describe(Field::dose);
    CHECK(dose.domain() == std::vector<int>{0, 1, 2, 3, 4});
    CHECK_FALSE(dose.parse_token("7"));
    CHECK_FALSE(dose.parse_token("2x"));
}

TEST_CASE("field access round trips through rows") {
    Sample s;
    s.patient_id = 4;
    s.traits = {61, Gender::male, 3};
    s.context = {4, 1, Motion::in_vehicle, Location::work, TimeOfDay::evening, DayOfWeek::sun};
    s.bci = {ActivityType::tai_chi, 0, DeliverySchedule::context_triggered, MessagePhrasing::authoritative,
             MessageContent::ability_planning};
    const std::vector<int> ids = {4};
    const auto schema = with_identifier(schema_default(), ids);
    const auto row = extract_row(schema, s);
    Sample t;
    apply_row(schema, row, t);
    CHECK(t == s);
    CHECK(get_field(s, Field::day_of_week) == 6);
    CHECK_THROWS_AS(get_field(s, Field::mat_m), SchemaViolation);
}

TEST_CASE("validation names the offending field") {
    Sample s;
    CHECK_NOTHROW(validate(s));
    s.bci.dose = 7;
    try {
        validate(s);
        FAIL("expected a violation");
    } catch (const SchemaViolation& e) {
        CHECK(e.field() == "dose");
    }
    s.bci.dose = 2;
    s.mat = MatVector{5, 0, 0};
    CHECK_THROWS_AS(validate(s), SchemaViolation);

    PatientProfile p;
    p.traits.age = 40;
    CHECK_NOTHROW(validate(p));
    p.action_threshold = 65;
    CHECK_THROWS_AS(validate(p), SchemaViolation);
}
