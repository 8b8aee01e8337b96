#pragma once

// Synthetic patients under Fogg's behaviour model: MAT scores are a
// deterministic function of the observable features and behaviour is
// performed iff M x A x T exceeds the patient's action threshold.

#include <cstdint>
#include <variant>

#include "bcip/dataset.hpp"
#include "bcip/domain.hpp"
#include "bcip/rng.hpp"

namespace bcip {

struct FixedThreshold {
    int value = 10;
};
struct UniformThreshold {};
/// round(fraction_below_40 * n) patients draw a threshold from [0, 39], the
/// rest from [40, 64].
struct StratifiedThreshold {
    double fraction_below_40 = 0.5;
};
using ThresholdPolicy = std::variant<FixedThreshold, UniformThreshold, StratifiedThreshold>;

struct CohortConfig {
    int n_patients = 1;
    ThresholdPolicy threshold_policy = UniformThreshold{};
    int samples_per_patient = 432;
    std::uint64_t seed = 0;
};

/// Throws ValidationError when a field is out of range.
void validate(const CohortConfig& config);

int clamp_score(int x) noexcept;

/// Ground-truth MAT:
///   M = clamp(m_enroll + da + dc)
///       da = +1 if affect >= 3, -1 if affect <= 1; dc = +1 for motivational_benefit
///   A = clamp(4 - dose + dp - dl - dh)
///       dp = +1 for ability_planning; dl = 1 if load >= 3;
///       dh = 1 for yoga/tai_chi/meditation away from home
///   T = clamp(2 + ds + dm + df - dv)
///       ds = +1 context_triggered; dm = +1 fixed schedule matching time of day;
///       df = +1 encouraging phrasing; dv = 1 in vehicle
/// Age, gender, day of week and the action threshold do not enter.
MatVector compute_mat(const PatientTraits& traits, const Context& context, const BciSpec& bci) noexcept;
inline MatVector compute_mat(const Sample& s) noexcept { return compute_mat(s.traits, s.context, s.bci); }

/// 1 iff M*A*T > threshold (strict).
int behaviour(const MatVector& mat, int action_threshold) noexcept;

/// Profile of patient `index`; a pure function of (config, index).
PatientProfile sample_patient(const CohortConfig& config, int index);

/// The patient's action threshold under the cohort's policy.
int draw_threshold(const CohortConfig& config, int index, Rng& rng);

Context sample_context(Rng& rng);
BciSpec sample_bci(Rng& rng);

/// Patient `index` and its samples_per_patient days, day_index 0..n-1.
std::vector<Sample> simulate_patient(const CohortConfig& config, int index);

/// Every patient of the cohort. Patients are generated in parallel (threads
/// == 0: hardware concurrency); the result is independent of the thread count.
Dataset generate_dataset(const CohortConfig& config, std::size_t threads = 1);

/// Profiles of the whole cohort, in patient order.
std::vector<PatientProfile> cohort_profiles(const CohortConfig& config);

}  // namespace bcip
