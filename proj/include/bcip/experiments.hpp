#pragma once

// Seeded reproductions of the three simulation studies: learning curves
// across action thresholds, learning from multiple patients, and adding MAT
// supervision.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcip/forest.hpp"

namespace bcip {

/// Unweighted mean of per-class F1 over the classes that occur in `truth` or
/// `predicted`; a class seen in only one of them scores 0. Labels outside a
/// non-empty `domain` are rejected. Throws ValidationError on length mismatch
/// or empty input.
double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::span<const int> domain = {});
double accuracy(std::span<const int> truth, std::span<const int> predicted);

enum class ExperimentId : std::uint8_t { threshold_sweep, multi_patient, supervision };

std::string_view experiment_name(ExperimentId id);
std::optional<ExperimentId> experiment_from_name(std::string_view name);

struct ExperimentConfig {
    ExperimentId id = ExperimentId::threshold_sweep;
    /// threshold_sweep: one fixed-threshold patient per entry.
    std::vector<int> thresholds = {0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 64};
    /// multi_patient / supervision: cohorts, paired by position.
    std::vector<int> patient_counts = {1, 5, 10, 25, 50, 100};
    std::vector<double> fractions_below_40 = {1.0, 0.4, 0.8, 0.65, 0.7, 0.52};
    /// Training samples per patient, ascending.
    std::vector<int> train_sizes = {2, 4, 8, 16, 24, 32};
    int test_size = 400;
    int repetitions = 20;
    std::uint64_t master_seed = 0;
    ForestParams forest;
    std::size_t threads = 1;

    /// Defaults for `id` (multi_patient trains on 30 samples per patient).
    static ExperimentConfig defaults(ExperimentId id);
};

void validate(const ExperimentConfig& config);

struct ResultRow {
    std::string experiment;
    std::string condition;
    int train_size = 0;
    int repetition = 0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double positive_label_fraction = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    /// Conditions in first-appearance order.
    std::vector<std::string> conditions() const;
    std::vector<double> scores(std::string_view condition, int train_size) const;
    double mean_f1(std::string_view condition, int train_size) const;
};

struct SummaryRow {
    std::string condition;
    int train_size = 0;
    int n = 0;
    double mean_f1 = 0.0;
    double sd_f1 = 0.0;  // sample standard deviation, 0 for n == 1
    double mean_accuracy = 0.0;
    double mean_positive_fraction = 0.0;
};
std::vector<SummaryRow> summarize(const ResultTable& table);

std::string threshold_condition(int threshold);
std::string cohort_condition(int n_patients, double fraction_below_40);
/// Setups of the supervision study.
inline constexpr std::string_view kSetupDirect = "a_raw_id";
inline constexpr std::string_view kSetupMat = "b_mat_id";
inline constexpr std::string_view kSetupMotivation = "c_motivation";
inline constexpr std::string_view kSetupAbility = "c_ability";
inline constexpr std::string_view kSetupTrigger = "c_trigger";
inline constexpr std::string_view kSetupTwoStep = "two_step";
std::string supervision_condition(int n_patients, double fraction_below_40, std::string_view setup);

/// Seed of repetition r: mix(master_seed, r).
std::uint64_t repetition_seed(std::uint64_t master_seed, int repetition);

ResultTable run_threshold_sweep(const ExperimentConfig& config);
ResultTable run_multi_patient(const ExperimentConfig& config);
ResultTable run_supervision_comparison(const ExperimentConfig& config);
ResultTable run_experiment(const ExperimentConfig& config);

void write_results_csv(const ResultTable& table, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out);
/// 800x500 line chart of mean macro F1 against train size, one series per
/// condition.
void write_svg(const std::vector<SummaryRow>& summary, std::string_view title, std::ostream& out);

/// Writes <id>_results.csv, <id>_summary.csv and <id>_plot.svg, creating
/// the directory when needed. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ResultTable& table, ExperimentId id,
                                                 const std::filesystem::path& dir);

}  // namespace bcip
