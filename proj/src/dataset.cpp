#include "bcip/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace bcip {

std::string_view label_kind_name(LabelKind k) {
    switch (k) {
        case LabelKind::behaviour: return "behaviour";
        case LabelKind::motivation: return "motivation";
        case LabelKind::ability: return "ability";
        case LabelKind::trigger: return "trigger";
    }
    return "";
}

int label_of(const Sample& s, LabelKind k) {
    switch (k) {
        case LabelKind::behaviour: return s.behaviour;
        case LabelKind::motivation: return get_field(s, Field::mat_m);
        case LabelKind::ability: return get_field(s, Field::mat_a);
        case LabelKind::trigger: return get_field(s, Field::mat_t);
    }
    return 0;
}

std::vector<int> label_domain(LabelKind k) {
    if (k == LabelKind::behaviour) return {0, 1};
    return {0, 1, 2, 3, 4};
}

std::vector<int> Dataset::patient_ids() const {
    std::vector<int> ids;
    for (const auto& s : rows) ids.push_back(s.patient_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

Dataset Dataset::with_schema(FeatureSchema s, LabelKind k) const {
    Dataset d;
    d.schema = std::move(s);
    d.rows = rows;
    d.label_kind = k;
    return d;
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::string> encoded_columns(const FeatureSchema& schema) {
    std::vector<std::string> cols;
    for (const auto& d : schema.features) {
        switch (d.kind) {
            case FeatureKind::ordinal:
                cols.emplace_back(d.name());
                break;
            case FeatureKind::nominal:
            case FeatureKind::identifier:
                for (int v : d.domain()) cols.push_back(std::string(d.name()) + "=" + d.token(v));
                break;
        }
    }
    return cols;
}

std::size_t encoded_width(const FeatureSchema& schema) {
    std::size_t w = 0;
    for (const auto& d : schema.features) w += d.kind == FeatureKind::ordinal ? 1 : d.domain().size();
    return w;
}

void encode_row(const FeatureSchema& schema, std::span<const int> row, std::span<double> out, bool strict) {
    if (row.size() != schema.size()) throw ValidationError("row width does not match schema");
    std::size_t c = 0;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& d = schema.features[i];
        const int v = row[i];
        const bool ok = d.contains(v);
        if (!ok && (strict || d.kind != FeatureKind::identifier))
            throw SchemaViolation(std::string(d.name()), "value " + std::to_string(v) + " out of domain");
        if (d.kind == FeatureKind::ordinal) {
            out[c++] = v;
            continue;
        }
        const auto dom = d.domain();
        for (int u : dom) out[c++] = (u == v) ? 1.0 : 0.0;
    }
}

std::vector<double> encode_row(const FeatureSchema& schema, std::span<const int> row, bool strict) {
    std::vector<double> out(encoded_width(schema));
    encode_row(schema, row, out, strict);
    return out;
}

FeatureRow decode_row(const FeatureSchema& schema, std::span<const double> encoded) {
    if (encoded.size() != encoded_width(schema)) throw ValidationError("encoded width does not match schema");
    FeatureRow row;
    std::size_t c = 0;
    for (const auto& d : schema.features) {
        if (d.kind == FeatureKind::ordinal) {
            row.push_back(static_cast<int>(encoded[c++]));
            continue;
        }
        const auto dom = d.domain();
        int value = -1;
        for (int u : dom)
            if (encoded[c++] == 1.0) value = u;
        if (value < 0) throw SchemaViolation(std::string(d.name()), "empty one-hot block");
        row.push_back(value);
    }
    return row;
}

EncodedMatrix encode(const Dataset& dataset) {
    if (dataset.empty()) throw ValidationError("cannot encode an empty dataset");
    EncodedMatrix m;
    m.columns = encoded_columns(dataset.schema);
    m.n_cols = m.columns.size();
    m.n_rows = dataset.size();
    m.values.resize(m.n_rows * m.n_cols);
    m.labels.reserve(m.n_rows);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        const auto& s = dataset.rows[r];
        auto row = extract_row(dataset.schema, s);
        encode_row(dataset.schema, row, std::span<double>(m.values.data() + r * m.n_cols, m.n_cols), true);
        m.labels.push_back(label_of(s, dataset.label_kind));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<Split> incremental_split(const Dataset& dataset, std::span<const int> train_sizes, int test_size) {
    if (test_size < 0) throw ValidationError("test_size must be >= 0");
    int max_train = 0;
    for (int n : train_sizes) {
        if (n < 0) throw ValidationError("train sizes must be >= 0");
        max_train = std::max(max_train, n);
    }

    std::map<int, std::vector<const Sample*>> by_patient;
    for (const auto& s : dataset.rows) by_patient[s.patient_id].push_back(&s);

    std::vector<Split> out(train_sizes.size());
    for (auto& sp : out) {
        sp.train.schema = sp.test.schema = dataset.schema;
        sp.train.label_kind = sp.test.label_kind = dataset.label_kind;
    }
    for (auto& [pid, rows] : by_patient) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Sample* a, const Sample* b) { return a->day_index < b->day_index; });
        const auto need = static_cast<std::size_t>(max_train + test_size);
        if (rows.size() < need)
            throw ValidationError("patient " + std::to_string(pid) + " has " + std::to_string(rows.size()) +
                                  " rows, split needs " + std::to_string(need));
        for (std::size_t k = 0; k < train_sizes.size(); ++k) {
            for (int i = 0; i < train_sizes[k]; ++i) out[k].train.rows.push_back(*rows[static_cast<std::size_t>(i)]);
            for (auto i = rows.size() - static_cast<std::size_t>(test_size); i < rows.size(); ++i)
                out[k].test.rows.push_back(*rows[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kNa = "NA";

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<int> parse_nonneg(std::string_view t) {
    int v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || v < 0) return std::nullopt;
    return v;
}

}  // namespace

std::string csv_header() {
    std::string h;
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        if (i) h += ',';
        h += field_name(static_cast<Field>(i));
    }
    return h + ",behaviour,day_index";
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << csv_header() << '\n';
    for (const auto& s : dataset.rows) {
        for (std::size_t i = 0; i <= static_cast<std::size_t>(Field::message_content); ++i) {
            auto f = static_cast<Field>(i);
            if (i) out << ',';
            out << describe(f).token(get_field(s, f));
        }
        if (s.mat)
            out << ',' << s.mat->motivation << ',' << s.mat->ability << ',' << s.mat->trigger;
        else
            out << ',' << kNa << ',' << kNa << ',' << kNa;
        out << ',' << s.behaviour << ',' << s.day_index << '\n';
    }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_csv(dataset, out);
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw CsvParseError(1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header()) throw CsvParseError(1, "unexpected header");

    Dataset ds;
    constexpr std::size_t n_cols = kFieldCount + 2;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tok = split_commas(line);
        if (tok.size() != n_cols)
            throw CsvParseError(lineno, "expected " + std::to_string(n_cols) + " columns, got " +
                                            std::to_string(tok.size()));
        Sample s;
        for (std::size_t i = 0; i <= static_cast<std::size_t>(Field::message_content); ++i) {
            auto f = static_cast<Field>(i);
            auto d = describe(f);
            auto v = f == Field::patient_id ? parse_nonneg(tok[i]) : d.parse_token(tok[i]);
            if (!v) throw CsvParseError(lineno, std::string(field_name(f)) + ": invalid value '" + std::string(tok[i]) + "'");
            set_field(s, f, *v);
        }
        const std::size_t m0 = static_cast<std::size_t>(Field::mat_m);
        const bool na = tok[m0] == kNa && tok[m0 + 1] == kNa && tok[m0 + 2] == kNa;
        if (!na) {
            for (std::size_t i = m0; i < kFieldCount; ++i) {
                auto f = static_cast<Field>(i);
                auto v = describe(f).parse_token(tok[i]);
                if (!v) throw CsvParseError(lineno, std::string(field_name(f)) + ": invalid value '" + std::string(tok[i]) + "'");
                set_field(s, f, *v);
            }
        }
        auto behaviour = parse_nonneg(tok[kFieldCount]);
        if (!behaviour || *behaviour > 1) throw CsvParseError(lineno, "behaviour: invalid value '" + std::string(tok[kFieldCount]) + "'");
        s.behaviour = *behaviour;
        auto day = parse_nonneg(tok[kFieldCount + 1]);
        if (!day) throw CsvParseError(lineno, "day_index: invalid value '" + std::string(tok[kFieldCount + 1]) + "'");
        s.day_index = *day;
        ds.rows.push_back(std::move(s));
    }
    return ds;
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_csv(in);
}

}  // namespace bcip
