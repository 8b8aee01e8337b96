#include "bcip/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcip/parallel.hpp"

namespace bcip {

namespace {

// Stream tag for the cohort-level stratification permutation.
constexpr std::uint64_t kStrataStream = 0xC0407;

std::uint64_t patient_stream(const CohortConfig& config, int index) {
    return mix(config.seed, static_cast<std::uint64_t>(index) + 1);
}

}  // namespace

void validate(const CohortConfig& config) {
    if (config.n_patients < 1) throw ValidationError("n_patients must be >= 1");
    if (config.samples_per_patient < 1) throw ValidationError("samples_per_patient must be >= 1");
    if (const auto* f = std::get_if<FixedThreshold>(&config.threshold_policy)) {
        if (f->value < kThresholdMin || f->value > kThresholdMax)
            throw ValidationError("fixed threshold must be in [0, 64]");
    }
    if (const auto* s = std::get_if<StratifiedThreshold>(&config.threshold_policy)) {
        if (!(s->fraction_below_40 >= 0.0 && s->fraction_below_40 <= 1.0))
            throw ValidationError("fraction_below_40 must be in [0, 1]");
    }
}

int clamp_score(int x) noexcept { return std::clamp(x, kScoreMin, kScoreMax); }

MatVector compute_mat(const PatientTraits& traits, const Context& context, const BciSpec& bci) noexcept {
    const int affect_delta = context.affect >= 3 ? 1 : (context.affect <= 1 ? -1 : 0);
    const int content_m = bci.message_content == MessageContent::motivational_benefit ? 1 : 0;

    const int planning = bci.message_content == MessageContent::ability_planning ? 1 : 0;
    const int load = context.cognitive_load >= 3 ? 1 : 0;
    const bool mindful = bci.activity_type == ActivityType::yoga || bci.activity_type == ActivityType::tai_chi ||
                         bci.activity_type == ActivityType::meditation;
    const int away = (mindful && context.location != Location::home) ? 1 : 0;

    const int triggered = bci.delivery_schedule == DeliverySchedule::context_triggered ? 1 : 0;
    const bool on_time =
        (bci.delivery_schedule == DeliverySchedule::fixed_morning && context.time_of_day == TimeOfDay::morning) ||
        (bci.delivery_schedule == DeliverySchedule::fixed_evening && context.time_of_day == TimeOfDay::evening);
    const int encouraging = bci.message_phrasing == MessagePhrasing::encouraging ? 1 : 0;
    const int vehicle = context.motion == Motion::in_vehicle ? 1 : 0;

    return MatVector{
        clamp_score(traits.motivation_at_enrollment + affect_delta + content_m),
        clamp_score(4 - bci.dose + planning - load - away),
        clamp_score(2 + triggered + (on_time ? 1 : 0) + encouraging - vehicle),
    };
}

int behaviour(const MatVector& mat, int action_threshold) noexcept {
    return mat.product() > action_threshold ? 1 : 0;
}

int draw_threshold(const CohortConfig& config, int index, Rng& rng) {
    return std::visit(
        [&](const auto& policy) -> int {
            using P = std::decay_t<decltype(policy)>;
            if constexpr (std::is_same_v<P, FixedThreshold>) {
                return policy.value;
            } else if constexpr (std::is_same_v<P, UniformThreshold>) {
                return rng.uniform_int(kThresholdMin, kThresholdMax);
            } else {
                const auto n = static_cast<std::size_t>(config.n_patients);
                const auto below = static_cast<std::size_t>(std::llround(policy.fraction_below_40 * static_cast<double>(n)));
                std::vector<std::size_t> order(n);
                std::iota(order.begin(), order.end(), 0);
                Rng strata(mix(config.seed, kStrataStream));
                strata.shuffle(order.begin(), order.end());
                const bool is_below = order[static_cast<std::size_t>(index)] < below;
                return is_below ? rng.uniform_int(0, 39) : rng.uniform_int(40, kThresholdMax);
            }
        },
        config.threshold_policy);
}

namespace {

PatientProfile draw_profile(const CohortConfig& config, int index, Rng& rng) {
    PatientProfile p;
    p.patient_id = index;
    p.traits.age = rng.uniform_int(kAgeMin, kAgeMax);
    p.traits.gender = static_cast<Gender>(rng.uniform_int(0, 2));
    p.traits.motivation_at_enrollment = rng.uniform_int(kScoreMin, kScoreMax);
    p.action_threshold = draw_threshold(config, index, rng);
    return p;
}

}  // namespace

PatientProfile sample_patient(const CohortConfig& config, int index) {
    if (index < 0 || index >= config.n_patients) throw ValidationError("patient index out of range");
    Rng rng(patient_stream(config, index));
    return draw_profile(config, index, rng);
}

Context sample_context(Rng& rng) {
    Context c;
    c.affect = rng.uniform_int(kScoreMin, kScoreMax);
    c.cognitive_load = rng.uniform_int(kScoreMin, kScoreMax);
    c.motion = static_cast<Motion>(rng.uniform_int(0, 2));
    c.location = static_cast<Location>(rng.uniform_int(0, 2));
    c.time_of_day = static_cast<TimeOfDay>(rng.uniform_int(0, 2));
    c.day_of_week = static_cast<DayOfWeek>(rng.uniform_int(0, 6));
    return c;
}

BciSpec sample_bci(Rng& rng) {
    BciSpec b;
    b.activity_type = static_cast<ActivityType>(rng.uniform_int(0, 4));
    b.dose = rng.uniform_int(kScoreMin, kScoreMax);
    b.delivery_schedule = static_cast<DeliverySchedule>(rng.uniform_int(0, 2));
    b.message_phrasing = static_cast<MessagePhrasing>(rng.uniform_int(0, 2));
    b.message_content = static_cast<MessageContent>(rng.uniform_int(0, 2));
    return b;
}

std::vector<Sample> simulate_patient(const CohortConfig& config, int index) {
    if (index < 0 || index >= config.n_patients) throw ValidationError("patient index out of range");
    Rng rng(patient_stream(config, index));
    const auto profile = draw_profile(config, index, rng);
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(config.samples_per_patient));
    for (int day = 0; day < config.samples_per_patient; ++day) {
        Sample s;
        s.patient_id = profile.patient_id;
        s.traits = profile.traits;
        s.context = sample_context(rng);
        s.bci = sample_bci(rng);
        s.mat = compute_mat(s);
        s.behaviour = behaviour(*s.mat, profile.action_threshold);
        s.day_index = day;
        out.push_back(s);
    }
    return out;
}

Dataset generate_dataset(const CohortConfig& config, std::size_t threads) {
    validate(config);
    std::vector<std::vector<Sample>> per_patient(static_cast<std::size_t>(config.n_patients));
    parallel_for(per_patient.size(), threads,
                 [&](std::size_t i) { per_patient[i] = simulate_patient(config, static_cast<int>(i)); });
    Dataset ds;
    ds.rows.reserve(per_patient.size() * static_cast<std::size_t>(config.samples_per_patient));
    for (auto& rows : per_patient) ds.rows.insert(ds.rows.end(), rows.begin(), rows.end());
    return ds;
}

std::vector<PatientProfile> cohort_profiles(const CohortConfig& config) {
    validate(config);
    std::vector<PatientProfile> out;
    for (int i = 0; i < config.n_patients; ++i) out.push_back(sample_patient(config, i));
    return out;
}

}  // namespace bcip
