#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "bcip/dataset.hpp"
#include "bcip/simulator.hpp"

using namespace bcip;

namespace {

Dataset simulated(int patients, int samples, std::uint64_t seed) {
    CohortConfig c;
    c.n_patients = patients;
    c.samples_per_patient = samples;
    c.seed = seed;
    return generate_dataset(c);
}

std::size_t column(const std::vector<std::string>& cols, const std::string& name) {
    auto it = std::find(cols.begin(), cols.end(), name);
    REQUIRE(it != cols.end());
    return static_cast<std::size_t>(it - cols.begin());
}

}  // namespace

TEST_CASE("ordinal features pass through") {
    Sample s;
    s.bci.dose = 3;
    Dataset d;
    d.rows = {s};
    const auto m = encode(d);
    CHECK(m.row(0)[column(m.columns, "dose")] == 3.0);
    CHECK(m.n_cols == encoded_width(d.schema));
    CHECK(m.labels == std::vector<int>{0});
}

TEST_CASE("nominal features are one-hot in declaration order") {
    Sample s;
    s.context.motion = Motion::walking;
    Dataset d;
    d.rows = {s};
    const auto m = encode(d);
    const auto first = column(m.columns, "motion=stationary");
    CHECK(m.columns[first + 1] == "motion=walking");
    CHECK(m.columns[first + 2] == "motion=in_vehicle");
    CHECK(m.row(0)[first] == 0.0);
    CHECK(m.row(0)[first + 1] == 1.0);
    CHECK(m.row(0)[first + 2] == 0.0);
}

TEST_CASE("encoded width") {
    // 5 ordinals + 3+3+3+3+7+5+3+3+3 one-hot columns.
    CHECK(encoded_width(schema_default()) == 5 + 33);
    const std::vector<int> ids = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(encoded_width(with_identifier(schema_default(), ids)) == 38 + 10);
    CHECK(encoded_width(mat_schema(ids)) == 3 + 10);
}

TEST_CASE("encode then decode is the identity on simulated rows") {
    const auto d = simulated(10, 100, 5);
    const auto schema = with_identifier(schema_default(), d.patient_ids());
    const auto view = d.with_schema(schema, LabelKind::behaviour);
    const auto m = encode(view);
    REQUIRE(m.n_rows == 1000);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        const auto expected = extract_row(schema, d.rows[r]);
        CHECK(decode_row(schema, m.row(r)) == expected);
        CHECK(m.labels[r] == d.rows[r].behaviour);
    }
    // Every one-hot block sums to 1.
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        std::size_t c = 0;
        for (const auto& f : schema.features) {
            if (f.kind == FeatureKind::ordinal) {
                ++c;
                continue;
            }
            const auto w = f.domain().size();
            const auto row = m.row(r);
            CHECK(std::accumulate(row.begin() + static_cast<std::ptrdiff_t>(c),
                                  row.begin() + static_cast<std::ptrdiff_t>(c + w), 0.0) == 1.0);
            c += w;
        }
    }
    CHECK(encode(view) == m);
}

TEST_CASE("labels follow the dataset's label kind") {
    const auto d = simulated(2, 50, 1);
    for (auto k : {LabelKind::motivation, LabelKind::ability, LabelKind::trigger}) {
        const auto m = encode(d.with_schema(schema_default(), k));
        for (std::size_t r = 0; r < m.n_rows; ++r) CHECK(m.labels[r] == label_of(d.rows[r], k));
    }
    CHECK(label_domain(LabelKind::behaviour) == std::vector<int>{0, 1});
    CHECK(label_domain(LabelKind::trigger) == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("encoding guards") {
    CHECK_THROWS_AS(encode(Dataset{}), ValidationError);
    Sample s;
    s.bci.dose = 9;
    Dataset d;
    d.rows = {s};
    try {
        encode(d);
        FAIL("expected a violation");
    } catch (const SchemaViolation& e) {
        CHECK(e.field() == "dose");
    }
    // Unknown identifier: strict rejects, lenient encodes zeros.
    const std::vector<int> ids = {1, 2};
    const auto schema = with_identifier(schema_default(), ids);
    Sample u;
    u.patient_id = 7;
    const auto row = extract_row(schema, u);
    CHECK_THROWS_AS(encode_row(schema, row, true), SchemaViolation);
    const auto lenient = encode_row(schema, row, false);
    CHECK(lenient[lenient.size() - 1] == 0.0);
    CHECK(lenient[lenient.size() - 2] == 0.0);
}

TEST_CASE("incremental split builds nested prefixes and a shared test set") {
    const auto d = simulated(3, 432, 8);
    const std::vector<int> sizes = {2, 4, 8, 16, 32};
    const auto splits = incremental_split(d, sizes, 400);
    REQUIRE(splits.size() == 5);
    for (std::size_t k = 0; k < splits.size(); ++k) {
        CHECK(splits[k].train.size() == static_cast<std::size_t>(3 * sizes[k]));
        CHECK(splits[k].test.size() == 1200);
        CHECK(splits[k].test == splits[0].test);
        std::set<std::pair<int, int>> test_keys;
        for (const auto& s : splits[k].test.rows) test_keys.insert({s.patient_id, s.day_index});
        for (const auto& s : splits[k].train.rows) {
            CHECK(test_keys.count({s.patient_id, s.day_index}) == 0);
            CHECK(s.day_index < sizes[k]);
        }
        if (k > 0) {
            for (const auto& s : splits[k - 1].train.rows)
                CHECK(std::find(splits[k].train.rows.begin(), splits[k].train.rows.end(), s) !=
                      splits[k].train.rows.end());
        }
    }
    for (const auto& s : splits[0].test.rows) CHECK(s.day_index >= 32);
}

TEST_CASE("degenerate split and insufficient rows") {
    const auto d = simulated(1, 20, 4);
    const std::vector<int> one = {5};
    const auto sp = incremental_split(d, one, 0);
    REQUIRE(sp.size() == 1);
    CHECK(sp[0].test.empty());
    CHECK(std::equal(sp[0].train.rows.begin(), sp[0].train.rows.end(), d.rows.begin()));
    const std::vector<int> big = {16};
    CHECK_THROWS_AS(incremental_split(d, big, 10), ValidationError);
}

TEST_CASE("CSV round trip") {
    auto d = simulated(5, 100, 12);
    d.rows[3].mat.reset();
    std::stringstream buf;
    write_csv(d, buf);
    const auto back = read_csv(buf);
    CHECK(back == d);
    CHECK_FALSE(back.rows[3].mat);
}

TEST_CASE("CSV errors") {
    SUBCASE("empty file") {
        std::stringstream empty;
        try {
            read_csv(empty);
            FAIL("expected an error");
        } catch (const CsvParseError& e) {
            CHECK(std::string(e.what()).find("missing header") != std::string::npos);
        }
    }
    SUBCASE("out-of-range dose reports its line") {
        const auto d = simulated(1, 3, 2);
        std::stringstream buf;
        write_csv(d, buf);
        std::string text = buf.str();
        // Third data row is line 4; set its dose column to 7.
        std::vector<std::string> lines;
        std::stringstream in(text);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
        REQUIRE(lines.size() == 4);
        std::vector<std::string> cells;
        std::stringstream row(lines[3]);
        for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
        cells[static_cast<std::size_t>(Field::dose)] = "7";
        lines[3].clear();
        for (std::size_t i = 0; i < cells.size(); ++i) lines[3] += (i ? "," : "") + cells[i];
        std::stringstream bad;
        for (const auto& l : lines) bad << l << '\n';
        try {
            read_csv(bad);
            FAIL("expected an error");
        } catch (const CsvParseError& e) {
            CHECK(e.line() == 4);
            CHECK(std::string(e.what()).find("dose") != std::string::npos);
        }
    }
    SUBCASE("wrong column count") {
        std::stringstream bad(csv_header() + "\n1,2,3\n");
        CHECK_THROWS_AS(read_csv(bad), CsvParseError);
    }
}
