#pragma once

// Shared vocabulary: patients, momentary context, intervention (BCI)
// properties, MAT scores, samples and the feature schema that ties them to
// the tabular models.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcip {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Input that violates a declared domain or contract. CLI maps it to exit 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaViolation : public ValidationError {
public:
    SchemaViolation(std::string field, const std::string& what)
        : ValidationError(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// ---------------------------------------------------------------------------
// Enumerations. Declaration order is the domain order used by one-hot
// encoding and by the CSV tokens.
// ---------------------------------------------------------------------------

enum class Gender : std::uint8_t { female, male, other };
enum class Motion : std::uint8_t { stationary, walking, in_vehicle };
enum class Location : std::uint8_t { home, work, outside };
enum class TimeOfDay : std::uint8_t { morning, afternoon, evening };
enum class DayOfWeek : std::uint8_t { mon, tue, wed, thu, fri, sat, sun };
enum class ActivityType : std::uint8_t { walk, meditation, yoga, tai_chi, positive_thinking };
enum class DeliverySchedule : std::uint8_t { fixed_morning, fixed_evening, context_triggered };
enum class MessagePhrasing : std::uint8_t { neutral, encouraging, authoritative };
enum class MessageContent : std::uint8_t { reminder_only, motivational_benefit, ability_planning };

inline constexpr int kScoreMin = 0;
inline constexpr int kScoreMax = 4;
inline constexpr int kThresholdMin = 0;
inline constexpr int kThresholdMax = 64;
inline constexpr int kAgeMin = 18;
inline constexpr int kAgeMax = 90;

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

/// Fixed characteristics observable by the models.
struct PatientTraits {
    int age = 40;
    Gender gender = Gender::female;
    int motivation_at_enrollment = 2;

    friend bool operator==(const PatientTraits&, const PatientTraits&) = default;
};

/// A simulated patient. action_threshold carries general receptivity and is
/// never a model feature.
struct PatientProfile {
    int patient_id = 0;
    PatientTraits traits;
    int action_threshold = 0;

    friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

struct Context {
    int affect = 2;          // 0 very negative .. 4 very positive
    int cognitive_load = 2;  // 0 .. 4
    Motion motion = Motion::stationary;
    Location location = Location::home;
    TimeOfDay time_of_day = TimeOfDay::morning;
    DayOfWeek day_of_week = DayOfWeek::mon;

    friend bool operator==(const Context&, const Context&) = default;
};

/// Intervention properties: the mutable surface for personalisation.
struct BciSpec {
    ActivityType activity_type = ActivityType::walk;
    int dose = 2;  // 0 = lightest
    DeliverySchedule delivery_schedule = DeliverySchedule::fixed_morning;
    MessagePhrasing message_phrasing = MessagePhrasing::neutral;
    MessageContent message_content = MessageContent::reminder_only;

    friend bool operator==(const BciSpec&, const BciSpec&) = default;
};

struct MatVector {
    int motivation = 0;
    int ability = 0;
    int trigger = 0;

    int product() const noexcept { return motivation * ability * trigger; }
    friend bool operator==(const MatVector&, const MatVector&) = default;
};

/// One (patient, context, BCI) observation. mat is ground truth and only
/// present for simulated data.
struct Sample {
    int patient_id = 0;
    PatientTraits traits;
    Context context;
    BciSpec bci;
    std::optional<MatVector> mat;
    int behaviour = 0;
    int day_index = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

// ---------------------------------------------------------------------------
// Fields and feature schema
// ---------------------------------------------------------------------------

/// Every addressable column of a Sample. Order matches the CSV layout.
enum class Field : std::uint8_t {
    patient_id,
    age,
    gender,
    motivation_at_enrollment,
    affect,
    cognitive_load,
    motion,
    location,
    time_of_day,
    day_of_week,
    activity_type,
    dose,
    delivery_schedule,
    message_phrasing,
    message_content,
    mat_m,
    mat_a,
    mat_t,
};
inline constexpr std::size_t kFieldCount = 18;

enum class FeatureKind : std::uint8_t { ordinal, nominal, identifier };
enum class Mutability : std::uint8_t { immutable, mutable_bci, mutable_mat };

std::string_view field_name(Field f);
std::optional<Field> field_from_name(std::string_view name);

/// Value labels of a nominal field in declaration order; empty for others.
std::span<const std::string_view> nominal_labels(Field f);

/// Encodes a single feature. Raw values are integers: the ordinal value, the
/// index into the nominal label list, or the patient id.
struct FeatureDescriptor {
    Field field = Field::age;
    FeatureKind kind = FeatureKind::ordinal;
    Mutability mutability = Mutability::immutable;
    int lo = 0;  // ordinal bounds (inclusive)
    int hi = 0;
    std::vector<int> ids;  // identifier domain, ascending

    std::string_view name() const { return field_name(field); }

    /// All valid raw values in domain order.
    std::vector<int> domain() const;
    bool contains(int raw) const;
    /// Human-readable token for a raw value (label or integer).
    std::string token(int raw) const;
    /// Inverse of token(); nullopt when the token is outside the domain.
    std::optional<int> parse_token(std::string_view token) const;

    friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

/// Ordered feature list; order is shared by encoding, training, search and
/// persistence.
struct FeatureSchema {
    std::vector<FeatureDescriptor> features;

    std::size_t size() const noexcept { return features.size(); }
    std::optional<std::size_t> index_of(Field f) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// Row of raw feature values in schema order.
using FeatureRow = std::vector<int>;

FeatureDescriptor describe(Field f, std::span<const int> identifier_ids = {});

/// The 14 observable patient, context and BCI features. BCI fields are
/// mutable_bci; everything else immutable.
FeatureSchema schema_default();

/// Appends patient_id as a one-hot identifier over `ids`.
FeatureSchema with_identifier(FeatureSchema schema, std::span<const int> ids);

/// (mat_m, mat_a, mat_t, patient_id): inputs of the behaviour step in the
/// two-step system. MAT features are mutable_mat.
FeatureSchema mat_schema(std::span<const int> ids);

/// Rebuilds a schema from its feature names.
FeatureSchema resolve_schema(std::span<const std::string> names, std::span<const int> ids = {});

std::array<Field, 5> bci_fields();

// ---------------------------------------------------------------------------
// Field access
// ---------------------------------------------------------------------------

/// Raw integer value of a field. Throws SchemaViolation for a MAT field when
/// the sample carries no MAT.
int get_field(const Sample& s, Field f);
/// Stores a raw value; no range check.
void set_field(Sample& s, Field f, int raw);

FeatureRow extract_row(const FeatureSchema& schema, const Sample& s);
void apply_row(const FeatureSchema& schema, std::span<const int> row, Sample& s);

/// Checks every field (and MAT, when present) against its declared domain.
void validate(const Sample& s);
void validate(const PatientProfile& p);

}  // namespace bcip
