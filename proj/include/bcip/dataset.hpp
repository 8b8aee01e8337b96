#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bcip/domain.hpp"

namespace bcip {

enum class LabelKind : std::uint8_t { behaviour, motivation, ability, trigger };

std::string_view label_kind_name(LabelKind k);
/// Label of a sample for the given task. MAT labels require s.mat.
int label_of(const Sample& s, LabelKind k);
/// Declared label domain: {0,1} for behaviour, {0..4} for MAT dimensions.
std::vector<int> label_domain(LabelKind k);

/// Rows ordered by (patient_id, day_index).
struct Dataset {
    FeatureSchema schema = schema_default();
    std::vector<Sample> rows;
    LabelKind label_kind = LabelKind::behaviour;

    bool empty() const noexcept { return rows.empty(); }
    std::size_t size() const noexcept { return rows.size(); }
    /// Distinct patient ids, ascending.
    std::vector<int> patient_ids() const;
    /// Same rows, different feature view.
    Dataset with_schema(FeatureSchema s, LabelKind k) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Numeric design matrix. Ordinals pass through; nominal and identifier
/// features expand to one-hot blocks in domain order.
struct EncodedMatrix {
    std::vector<std::string> columns;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;  // row-major
    std::vector<int> labels;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * n_cols, n_cols}; }

    friend bool operator==(const EncodedMatrix&, const EncodedMatrix&) = default;
};

std::vector<std::string> encoded_columns(const FeatureSchema& schema);
std::size_t encoded_width(const FeatureSchema& schema);

/// Writes one encoded row into `out` (size encoded_width). With strict off an
/// identifier outside the domain yields an all-zero block; otherwise any
/// out-of-domain value throws SchemaViolation.
void encode_row(const FeatureSchema& schema, std::span<const int> row, std::span<double> out, bool strict = true);
std::vector<double> encode_row(const FeatureSchema& schema, std::span<const int> row, bool strict = true);

FeatureRow decode_row(const FeatureSchema& schema, std::span<const double> encoded);

/// Throws ValidationError on an empty dataset, SchemaViolation on a row that
/// violates the schema.
EncodedMatrix encode(const Dataset& dataset);

struct Split {
    Dataset train;
    Dataset test;
};

/// Temporal split applied per patient and pooled: the test set holds each
/// patient's last test_size rows, the k-th train set each patient's first
/// train_sizes[k] rows. Train sets are nested prefixes.
std::vector<Split> incremental_split(const Dataset& dataset, std::span<const int> train_sizes, int test_size);

// CSV persistence. Column order is fixed: the 15 sample fields, mat_m, mat_a,
// mat_t, behaviour, day_index. Missing MAT is written as NA.
std::string csv_header();
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Parse failure; line() is 1-based.
class CsvParseError : public ValidationError {
public:
    CsvParseError(std::size_t line, const std::string& what)
        : ValidationError(what + (line ? " (line " + std::to_string(line) + ")" : "")), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

Dataset read_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

}  // namespace bcip
