#include "bcip/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "bcip/parallel.hpp"
#include "bcip/pipeline.hpp"
#include "bcip/simulator.hpp"

namespace bcip {

// ---------------------------------------------------------------------------
// Metrics

double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::span<const int> domain) {
    if (truth.size() != predicted.size()) throw ValidationError("truth and prediction lengths differ");
    if (truth.empty()) throw ValidationError("macro_f1 needs at least one label");
    std::set<int> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());
    if (!domain.empty()) {
        for (int c : classes)
            if (std::find(domain.begin(), domain.end(), c) == domain.end())
                throw ValidationError("label " + std::to_string(c) + " outside the declared domain");
    }
    double sum = 0.0;
    for (int c : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == c, p = predicted[i] == c;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        // F1 = 2PR/(P+R) = 2TP/(2TP+FP+FN); zero when the class is only in one vector.
        if (tp > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return sum / static_cast<double>(classes.size());
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw ValidationError("truth and prediction lengths differ");
    if (truth.empty()) throw ValidationError("accuracy needs at least one label");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Config

std::string_view experiment_name(ExperimentId id) {
    switch (id) {
        case ExperimentId::threshold_sweep: return "threshold_sweep";
        case ExperimentId::multi_patient: return "multi_patient";
        case ExperimentId::supervision: return "supervision";
    }
    return "";
}

std::optional<ExperimentId> experiment_from_name(std::string_view name) {
    for (auto id : {ExperimentId::threshold_sweep, ExperimentId::multi_patient, ExperimentId::supervision})
        if (experiment_name(id) == name) return id;
    return std::nullopt;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentId id) {
    ExperimentConfig c;
    c.id = id;
    if (id == ExperimentId::multi_patient) c.train_sizes = {30};
    return c;
}

void validate(const ExperimentConfig& c) {
    if (c.repetitions < 1) throw ValidationError("repetitions must be >= 1");
    if (c.train_sizes.empty()) throw ValidationError("train_sizes must be non-empty");
    for (std::size_t i = 0; i < c.train_sizes.size(); ++i) {
        if (c.train_sizes[i] < 1) throw ValidationError("train_sizes must be >= 1");
        if (i && c.train_sizes[i] <= c.train_sizes[i - 1]) throw ValidationError("train_sizes must be ascending");
    }
    if (c.test_size < 1) throw ValidationError("test_size must be >= 1");
    validate(c.forest);
    if (c.id == ExperimentId::threshold_sweep) {
        if (c.thresholds.empty()) throw ValidationError("thresholds must be non-empty");
        for (int t : c.thresholds)
            if (t < kThresholdMin || t > kThresholdMax) throw ValidationError("thresholds must be in [0, 64]");
    } else {
        if (c.patient_counts.empty()) throw ValidationError("patient_counts must be non-empty");
        if (c.patient_counts.size() != c.fractions_below_40.size())
            throw ValidationError("patient_counts and fractions_below_40 must have the same length");
        for (int n : c.patient_counts)
            if (n < 1) throw ValidationError("patient_counts must be >= 1");
        for (double f : c.fractions_below_40)
            if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("fractions_below_40 must be in [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// Tables

std::vector<std::string> ResultTable::conditions() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (std::find(out.begin(), out.end(), r.condition) == out.end()) out.push_back(r.condition);
    return out;
}

std::vector<double> ResultTable::scores(std::string_view condition, int train_size) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.condition == condition && r.train_size == train_size) out.push_back(r.macro_f1);
    return out;
}

double ResultTable::mean_f1(std::string_view condition, int train_size) const {
    auto s = scores(condition, train_size);
    if (s.empty()) throw std::out_of_range("no results for " + std::string(condition));
    double sum = 0.0;
    for (double v : s) sum += v;
    return sum / static_cast<double>(s.size());
}

std::vector<SummaryRow> summarize(const ResultTable& table) {
    std::vector<SummaryRow> out;
    std::map<std::pair<std::string, int>, std::size_t> slot;
    std::vector<std::vector<const ResultRow*>> groups;
    for (const auto& r : table.rows) {
        auto key = std::make_pair(r.condition, r.train_size);
        auto [it, fresh] = slot.emplace(key, groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(&r);
    }
    for (const auto& g : groups) {
        SummaryRow s;
        s.condition = g.front()->condition;
        s.train_size = g.front()->train_size;
        s.n = static_cast<int>(g.size());
        for (const auto* r : g) {
            s.mean_f1 += r->macro_f1;
            s.mean_accuracy += r->accuracy;
            s.mean_positive_fraction += r->positive_label_fraction;
        }
        const double n = static_cast<double>(s.n);
        s.mean_f1 /= n;
        s.mean_accuracy /= n;
        s.mean_positive_fraction /= n;
        if (s.n > 1) {
            double ss = 0.0;
            for (const auto* r : g) ss += (r->macro_f1 - s.mean_f1) * (r->macro_f1 - s.mean_f1);
            s.sd_f1 = std::sqrt(ss / (n - 1.0));
        }
        out.push_back(s);
    }
    return out;
}

namespace {

std::string fmt_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", f);
    return buf;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double positive_fraction(std::span<const int> labels) {
    std::size_t pos = 0;
    for (int y : labels) pos += y == 1;
    return labels.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(labels.size());
}

std::vector<int> behaviour_labels(const Dataset& d) {
    std::vector<int> y;
    y.reserve(d.size());
    for (const auto& s : d.rows) y.push_back(s.behaviour);
    return y;
}

// Per-unit seed streams.
constexpr std::uint64_t kCohortStream = 1;
constexpr std::uint64_t kForestStream = 2;

CohortConfig cohort_for(const ExperimentConfig& c, std::uint64_t seed, int n_patients, ThresholdPolicy policy) {
    CohortConfig cohort;
    cohort.n_patients = n_patients;
    cohort.threshold_policy = policy;
    cohort.samples_per_patient = c.train_sizes.back() + c.test_size;
    cohort.seed = mix(seed, kCohortStream);
    return cohort;
}

ForestParams forest_for(const ExperimentConfig& c, std::uint64_t seed, std::size_t train_index) {
    ForestParams p = c.forest;
    p.seed = mix(mix(seed, kForestStream), train_index);
    return p;
}

ResultRow make_row(ExperimentId id, std::string condition, int train_size, int rep, std::span<const int> truth,
                   std::span<const int> pred, std::span<const int> domain, double pos_fraction) {
    return ResultRow{std::string(experiment_name(id)), std::move(condition), train_size, rep,
                     macro_f1(truth, pred, domain), accuracy(truth, pred), pos_fraction};
}

/// Runs fn(condition, rep, out) for every (condition, repetition) unit in
/// parallel and concatenates the per-unit rows in (condition, train size,
/// repetition) order.
template <typename Fn>
ResultTable run_units(const ExperimentConfig& c, std::size_t n_conditions, Fn&& fn) {
    const auto reps = static_cast<std::size_t>(c.repetitions);
    std::vector<std::vector<ResultRow>> units(n_conditions * reps);
    parallel_for(units.size(), c.threads, [&](std::size_t u) {
        fn(u / reps, static_cast<int>(u % reps), units[u]);
    });
    ResultTable table;
    for (std::size_t cond = 0; cond < n_conditions; ++cond) {
        // Each unit emits rows grouped by (sub-condition, train size); interleave reps.
        const auto& first = units[cond * reps];
        for (std::size_t k = 0; k < first.size(); ++k)
            for (std::size_t r = 0; r < reps; ++r) table.rows.push_back(units[cond * reps + r].at(k));
    }
    return table;
}

}  // namespace

std::string threshold_condition(int threshold) { return "threshold=" + std::to_string(threshold); }

std::string cohort_condition(int n_patients, double fraction_below_40) {
    return "patients=" + std::to_string(n_patients) + "|below40=" + fmt_fraction(fraction_below_40);
}

std::string supervision_condition(int n_patients, double fraction_below_40, std::string_view setup) {
    return cohort_condition(n_patients, fraction_below_40) + "|setup=" + std::string(setup);
}

std::uint64_t repetition_seed(std::uint64_t master_seed, int repetition) {
    return mix(master_seed, static_cast<std::uint64_t>(repetition));
}

// ---------------------------------------------------------------------------
// Experiments

ResultTable run_threshold_sweep(const ExperimentConfig& c) {
    validate(c);
    const std::vector<int> domain = {0, 1};
    return run_units(c, c.thresholds.size(), [&](std::size_t cond, int rep, std::vector<ResultRow>& out) {
        const int threshold = c.thresholds[cond];
        const auto seed = mix(repetition_seed(c.master_seed, rep), cond);
        const auto data = generate_dataset(cohort_for(c, seed, 1, FixedThreshold{threshold}));
        const auto splits = incremental_split(data, c.train_sizes, c.test_size);
        const auto truth = behaviour_labels(splits.front().test);
        const double pos = positive_fraction(truth);
        for (std::size_t k = 0; k < splits.size(); ++k) {
            const auto model = train_direct(splits[k].train, false, forest_for(c, seed, k));
            const auto pred = model.predict(splits[k].test.rows);
            out.push_back(make_row(c.id, threshold_condition(threshold), c.train_sizes[k], rep, truth, pred, domain, pos));
        }
    });
}

ResultTable run_multi_patient(const ExperimentConfig& c) {
    validate(c);
    const std::vector<int> domain = {0, 1};
    return run_units(c, c.patient_counts.size(), [&](std::size_t cond, int rep, std::vector<ResultRow>& out) {
        const int n = c.patient_counts[cond];
        const double frac = c.fractions_below_40[cond];
        const auto seed = mix(repetition_seed(c.master_seed, rep), cond);
        const auto data = generate_dataset(cohort_for(c, seed, n, StratifiedThreshold{frac}));
        const auto splits = incremental_split(data, c.train_sizes, c.test_size);
        const auto truth = behaviour_labels(splits.front().test);
        const double pos = positive_fraction(truth);
        for (std::size_t k = 0; k < splits.size(); ++k) {
            const auto model = train_direct(splits[k].train, true, forest_for(c, seed, k));
            const auto pred = model.predict(splits[k].test.rows);
            out.push_back(make_row(c.id, cohort_condition(n, frac), c.train_sizes[k], rep, truth, pred, domain, pos));
        }
    });
}

ResultTable run_supervision_comparison(const ExperimentConfig& c) {
    validate(c);
    const std::vector<int> binary = {0, 1};
    const std::vector<int> scores = {0, 1, 2, 3, 4};
    const std::array<std::string_view, 6> setups = {kSetupDirect,  kSetupMat,     kSetupMotivation,
                                                    kSetupAbility, kSetupTrigger, kSetupTwoStep};

    auto table = run_units(c, c.patient_counts.size(), [&](std::size_t cond, int rep, std::vector<ResultRow>& out) {
        const int n = c.patient_counts[cond];
        const double frac = c.fractions_below_40[cond];
        const auto seed = mix(repetition_seed(c.master_seed, rep), cond);
        const auto data = generate_dataset(cohort_for(c, seed, n, StratifiedThreshold{frac}));
        const auto splits = incremental_split(data, c.train_sizes, c.test_size);
        const auto& test = splits.front().test;
        const auto truth = behaviour_labels(test);
        const double pos = positive_fraction(truth);
        std::array<std::vector<int>, 3> mat_truth;
        for (const auto& s : test.rows) {
            mat_truth[0].push_back(s.mat->motivation);
            mat_truth[1].push_back(s.mat->ability);
            mat_truth[2].push_back(s.mat->trigger);
        }

        // rows[setup][train index]
        std::array<std::vector<ResultRow>, setups.size()> rows;
        for (std::size_t k = 0; k < splits.size(); ++k) {
            const auto& train = splits[k].train;
            const auto params = forest_for(c, seed, k);
            const int size = c.train_sizes[k];
            auto emit = [&](std::size_t setup, std::span<const int> t, std::span<const int> p, std::span<const int> dom) {
                rows[setup].push_back(make_row(c.id, supervision_condition(n, frac, setups[setup]), size, rep, t, p, dom, pos));
            };

            const auto direct = train_direct(train, true, params);
            const auto two_step = train_two_step(train, params);

            const auto pred_direct = direct.predict(test.rows);
            std::vector<FeatureRow> true_mat_rows, predicted_mat_rows;
            std::array<std::vector<int>, 3> pred_dim;
            const auto mats = two_step.predict_mat(test.rows);
            for (std::size_t i = 0; i < test.rows.size(); ++i) {
                const auto& s = test.rows[i];
                true_mat_rows.push_back(two_step.behaviour_row(*s.mat, s.patient_id));
                predicted_mat_rows.push_back(two_step.behaviour_row(mats[i], s.patient_id));
                pred_dim[0].push_back(mats[i].motivation);
                pred_dim[1].push_back(mats[i].ability);
                pred_dim[2].push_back(mats[i].trigger);
            }
            const auto pred_mat = two_step.behaviour.predict(true_mat_rows);
            const auto pred_composed = two_step.behaviour.predict(predicted_mat_rows);
            emit(0, truth, pred_direct, binary);
            emit(1, truth, pred_mat, binary);
            for (std::size_t d = 0; d < 3; ++d) emit(2 + d, mat_truth[d], pred_dim[d], scores);
            emit(5, truth, pred_composed, binary);
        }
        for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    });
    return table;
}

ResultTable run_experiment(const ExperimentConfig& config) {
    switch (config.id) {
        case ExperimentId::threshold_sweep: return run_threshold_sweep(config);
        case ExperimentId::multi_patient: return run_multi_patient(config);
        case ExperimentId::supervision: return run_supervision_comparison(config);
    }
    throw ValidationError("unknown experiment");
}

// ---------------------------------------------------------------------------
// Output

void write_results_csv(const ResultTable& table, std::ostream& out) {
    out << "experiment,condition,train_size,repetition,macro_f1,accuracy,positive_label_fraction\n";
    for (const auto& r : table.rows)
        out << r.experiment << ',' << r.condition << ',' << r.train_size << ',' << r.repetition << ','
            << fmt6(r.macro_f1) << ',' << fmt6(r.accuracy) << ',' << fmt6(r.positive_label_fraction) << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out) {
    out << "condition,train_size,n,mean_macro_f1,sd_macro_f1,mean_accuracy,mean_positive_label_fraction\n";
    for (const auto& s : summary)
        out << s.condition << ',' << s.train_size << ',' << s.n << ',' << fmt6(s.mean_f1) << ',' << fmt6(s.sd_f1)
            << ',' << fmt6(s.mean_accuracy) << ',' << fmt6(s.mean_positive_fraction) << '\n';
}

namespace {

constexpr std::array<std::string_view, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

void write_svg(const std::vector<SummaryRow>& summary, std::string_view title, std::ostream& out) {
    constexpr double width = 800, height = 500;
    constexpr double left = 70, right = 230, top = 50, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    std::vector<std::string> series;
    int xmin = 0, xmax = 1;
    bool first = true;
    for (const auto& s : summary) {
        if (std::find(series.begin(), series.end(), s.condition) == series.end()) series.push_back(s.condition);
        if (first) {
            xmin = xmax = s.train_size;
            first = false;
        }
        xmin = std::min(xmin, s.train_size);
        xmax = std::max(xmax, s.train_size);
    }
    const double xspan = xmax > xmin ? xmax - xmin : 1.0;
    auto px = [&](int x) { return xmax > xmin ? left + (x - xmin) / xspan * plot_w : left + plot_w / 2; };
    auto py = [&](double y) { return top + (1.0 - y) * plot_h; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << xml_escape(title) << "</text>\n";
    // Axes and grid.
    for (int i = 0; i <= 5; ++i) {
        const double y = i / 5.0;
        out << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
            << num(py(y)) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\" "
            << "font-family=\"sans-serif\" font-size=\"11\">" << num(y) << "</text>\n";
    }
    std::set<int> xticks;
    for (const auto& s : summary) xticks.insert(s.train_size);
    for (int x : xticks)
        out << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + plot_h + 18) << "\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"11\">" << x << "</text>\n";
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(left + plot_w)
        << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(top + plot_h) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 15)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">training samples per patient</text>\n";
    out << "<text x=\"18\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\" transform=\"rotate(-90 18 " << num(top + plot_h / 2) << ")\">mean macro F1</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto color = kPalette[i % kPalette.size()];
        std::string points;
        for (const auto& s : summary) {
            if (s.condition != series[i]) continue;
            if (!points.empty()) points += ' ';
            points += num(px(s.train_size)) + "," + num(py(s.mean_f1));
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
        for (const auto& s : summary) {
            if (s.condition != series[i]) continue;
            out << "<circle cx=\"" << num(px(s.train_size)) << "\" cy=\"" << num(py(s.mean_f1)) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        }
        const double step = std::min(14.0, (height - top - 10.0) / static_cast<double>(series.size()));
        const double ly = top + step * static_cast<double>(i);
        out << "<line x1=\"" << num(width - right + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(width - right + 35)
            << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(width - right + 40) << "\" y=\"" << num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"9\">" << xml_escape(series[i]) << "</text>\n";
    }
    out << "</svg>\n";
}

std::vector<std::filesystem::path> write_outputs(const ResultTable& table, ExperimentId id,
                                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string name(experiment_name(id));
    const auto summary = summarize(table);
    std::vector<std::filesystem::path> paths = {dir / (name + "_results.csv"), dir / (name + "_summary.csv"),
                                                dir / (name + "_plot.svg")};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
        return f;
    };
    {
        auto f = open(paths[0]);
        write_results_csv(table, f);
    }
    {
        auto f = open(paths[1]);
        write_summary_csv(summary, f);
    }
    {
        auto f = open(paths[2]);
        write_svg(summary, name, f);
    }
    return paths;
}

}  // namespace bcip
