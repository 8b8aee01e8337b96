#include "bcip/classifier.hpp"

#include <algorithm>

#include "bcip/dataset.hpp"

namespace bcip {

Classifier Classifier::from_forest(FeatureSchema schema, Forest forest) {
    if (encoded_width(schema) != forest.n_features)
        throw ValidationError("forest width does not match the schema encoding");
    Classifier c;
    c.schema_ = std::move(schema);
    c.classes_ = forest.classes;
    c.forest_ = std::make_shared<const Forest>(std::move(forest));
    return c;
}

Classifier Classifier::from_function(FeatureSchema schema, std::vector<int> classes, ProbaFn fn) {
    if (classes.empty() || !std::is_sorted(classes.begin(), classes.end()))
        throw ValidationError("classifier classes must be non-empty and ascending");
    Classifier c;
    c.schema_ = std::move(schema);
    c.classes_ = std::move(classes);
    c.fn_ = std::move(fn);
    return c;
}

std::vector<double> Classifier::predict_proba(std::span<const int> row) const {
    if (row.size() != schema_.size()) throw ValidationError("row width does not match classifier schema");
    if (forest_) return forest_->predict_proba(encode_row(schema_, row, /*strict=*/false));
    return fn_(row);
}

int Classifier::predict(std::span<const int> row) const { return classes_[argmax(predict_proba(row))]; }

std::vector<int> Classifier::predict(std::span<const FeatureRow> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    if (!forest_) {
        for (const auto& r : rows) out.push_back(predict(r));
        return out;
    }
    EncodedMatrix m;
    m.n_rows = rows.size();
    m.n_cols = forest_->n_features;
    m.values.resize(m.n_rows * m.n_cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != schema_.size()) throw ValidationError("row width does not match classifier schema");
        encode_row(schema_, rows[i], {m.values.data() + i * m.n_cols, m.n_cols}, /*strict=*/false);
    }
    return forest_->predict(m);
}

double Classifier::probability_of(std::span<const int> row, int label) const {
    auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
    if (it == classes_.end() || *it != label) return 0.0;
    return predict_proba(row)[static_cast<std::size_t>(it - classes_.begin())];
}

}  // namespace bcip
