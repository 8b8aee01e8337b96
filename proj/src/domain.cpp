#include "bcip/domain.hpp"

#include <algorithm>
#include <charconv>

namespace bcip {

namespace {

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "patient_id",       "age",           "gender",
    "motivation_at_enrollment",          "affect",
    "cognitive_load",   "motion",        "location",
    "time_of_day",      "day_of_week",   "activity_type",
    "dose",             "delivery_schedule", "message_phrasing",
    "message_content",  "mat_m",         "mat_a",
    "mat_t",
};

constexpr std::array<std::string_view, 3> kGender = {"female", "male", "other"};
constexpr std::array<std::string_view, 3> kMotion = {"stationary", "walking", "in_vehicle"};
constexpr std::array<std::string_view, 3> kLocation = {"home", "work", "outside"};
constexpr std::array<std::string_view, 3> kTime = {"morning", "afternoon", "evening"};
constexpr std::array<std::string_view, 7> kDay = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
constexpr std::array<std::string_view, 5> kActivity = {"walk", "meditation", "yoga", "tai_chi",
                                                       "positive_thinking"};
constexpr std::array<std::string_view, 3> kSchedule = {"fixed_morning", "fixed_evening",
                                                       "context_triggered"};
constexpr std::array<std::string_view, 3> kPhrasing = {"neutral", "encouraging", "authoritative"};
constexpr std::array<std::string_view, 3> kContent = {"reminder_only", "motivational_benefit",
                                                      "ability_planning"};

bool is_mat(Field f) { return f == Field::mat_m || f == Field::mat_a || f == Field::mat_t; }

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) return std::nullopt;
    return v;
}

}  // namespace

std::string_view field_name(Field f) { return kFieldNames.at(static_cast<std::size_t>(f)); }

std::optional<Field> field_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFieldNames.size(); ++i)
        if (kFieldNames[i] == name) return static_cast<Field>(i);
    return std::nullopt;
}

std::span<const std::string_view> nominal_labels(Field f) {
    switch (f) {
        case Field::gender: return kGender;
        case Field::motion: return kMotion;
        case Field::location: return kLocation;
        case Field::time_of_day: return kTime;
        case Field::day_of_week: return kDay;
        case Field::activity_type: return kActivity;
        case Field::delivery_schedule: return kSchedule;
        case Field::message_phrasing: return kPhrasing;
        case Field::message_content: return kContent;
        default: return {};
    }
}

// ---------------------------------------------------------------------------

std::vector<int> FeatureDescriptor::domain() const {
    std::vector<int> out;
    switch (kind) {
        case FeatureKind::ordinal:
            for (int v = lo; v <= hi; ++v) out.push_back(v);
            break;
        case FeatureKind::nominal:
            for (int v = 0; v < static_cast<int>(nominal_labels(field).size()); ++v) out.push_back(v);
            break;
        case FeatureKind::identifier:
            out = ids;
            break;
    }
    return out;
}

bool FeatureDescriptor::contains(int raw) const {
    switch (kind) {
        case FeatureKind::ordinal: return raw >= lo && raw <= hi;
        case FeatureKind::nominal: return raw >= 0 && raw < static_cast<int>(nominal_labels(field).size());
        case FeatureKind::identifier: return std::binary_search(ids.begin(), ids.end(), raw);
    }
    return false;
}

std::string FeatureDescriptor::token(int raw) const {
    if (kind == FeatureKind::nominal) return std::string(nominal_labels(field)[static_cast<std::size_t>(raw)]);
    return std::to_string(raw);
}

std::optional<int> FeatureDescriptor::parse_token(std::string_view tok) const {
    if (kind == FeatureKind::nominal) {
        auto labels = nominal_labels(field);
        auto it = std::find(labels.begin(), labels.end(), tok);
        if (it == labels.end()) return std::nullopt;
        return static_cast<int>(it - labels.begin());
    }
    auto v = parse_int(tok);
    if (!v || !contains(*v)) return std::nullopt;
    return v;
}

std::optional<std::size_t> FeatureSchema::index_of(Field f) const {
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].field == f) return i;
    return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    auto f = field_from_name(name);
    if (!f) return std::nullopt;
    return index_of(*f);
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    out.reserve(features.size());
    for (const auto& d : features) out.emplace_back(d.name());
    return out;
}

// ---------------------------------------------------------------------------

FeatureDescriptor describe(Field f, std::span<const int> identifier_ids) {
    FeatureDescriptor d;
    d.field = f;
    switch (f) {
        case Field::patient_id:
            d.kind = FeatureKind::identifier;
            d.ids.assign(identifier_ids.begin(), identifier_ids.end());
            std::sort(d.ids.begin(), d.ids.end());
            d.ids.erase(std::unique(d.ids.begin(), d.ids.end()), d.ids.end());
            break;
        case Field::age:
            d.lo = kAgeMin;
            d.hi = kAgeMax;
            break;
        case Field::motivation_at_enrollment:
        case Field::affect:
        case Field::cognitive_load:
        case Field::dose:
        case Field::mat_m:
        case Field::mat_a:
        case Field::mat_t:
            d.lo = kScoreMin;
            d.hi = kScoreMax;
            break;
        default:
            d.kind = FeatureKind::nominal;
            break;
    }
    if (f == Field::activity_type || f == Field::dose || f == Field::delivery_schedule ||
        f == Field::message_phrasing || f == Field::message_content)
        d.mutability = Mutability::mutable_bci;
    else if (is_mat(f))
        d.mutability = Mutability::mutable_mat;
    return d;
}

std::array<Field, 5> bci_fields() {
    return {Field::activity_type, Field::dose, Field::delivery_schedule, Field::message_phrasing,
            Field::message_content};
}

FeatureSchema schema_default() {
    FeatureSchema s;
    for (auto i = static_cast<std::size_t>(Field::age); i <= static_cast<std::size_t>(Field::message_content); ++i)
        s.features.push_back(describe(static_cast<Field>(i)));
    return s;
}

FeatureSchema with_identifier(FeatureSchema schema, std::span<const int> ids) {
    schema.features.push_back(describe(Field::patient_id, ids));
    return schema;
}

FeatureSchema mat_schema(std::span<const int> ids) {
    FeatureSchema s;
    s.features = {describe(Field::mat_m), describe(Field::mat_a), describe(Field::mat_t),
                  describe(Field::patient_id, ids)};
    return s;
}

FeatureSchema resolve_schema(std::span<const std::string> names, std::span<const int> ids) {
    FeatureSchema s;
    for (const auto& n : names) {
        auto f = field_from_name(n);
        if (!f) throw SchemaViolation(n, "unknown feature");
        if (s.index_of(*f)) throw SchemaViolation(n, "duplicate feature");
        s.features.push_back(describe(*f, ids));
    }
    return s;
}

// ---------------------------------------------------------------------------

int get_field(const Sample& s, Field f) {
    switch (f) {
        case Field::patient_id: return s.patient_id;
        case Field::age: return s.traits.age;
        case Field::gender: return static_cast<int>(s.traits.gender);
        case Field::motivation_at_enrollment: return s.traits.motivation_at_enrollment;
        case Field::affect: return s.context.affect;
        case Field::cognitive_load: return s.context.cognitive_load;
        case Field::motion: return static_cast<int>(s.context.motion);
        case Field::location: return static_cast<int>(s.context.location);
        case Field::time_of_day: return static_cast<int>(s.context.time_of_day);
        case Field::day_of_week: return static_cast<int>(s.context.day_of_week);
        case Field::activity_type: return static_cast<int>(s.bci.activity_type);
        case Field::dose: return s.bci.dose;
        case Field::delivery_schedule: return static_cast<int>(s.bci.delivery_schedule);
        case Field::message_phrasing: return static_cast<int>(s.bci.message_phrasing);
        case Field::message_content: return static_cast<int>(s.bci.message_content);
        case Field::mat_m:
        case Field::mat_a:
        case Field::mat_t:
            if (!s.mat) throw SchemaViolation(std::string(field_name(f)), "sample carries no MAT scores");
            return f == Field::mat_m ? s.mat->motivation : f == Field::mat_a ? s.mat->ability : s.mat->trigger;
    }
    return 0;
}

void set_field(Sample& s, Field f, int raw) {
    switch (f) {
        case Field::patient_id: s.patient_id = raw; break;
        case Field::age: s.traits.age = raw; break;
        case Field::gender: s.traits.gender = static_cast<Gender>(raw); break;
        case Field::motivation_at_enrollment: s.traits.motivation_at_enrollment = raw; break;
        case Field::affect: s.context.affect = raw; break;
        case Field::cognitive_load: s.context.cognitive_load = raw; break;
        case Field::motion: s.context.motion = static_cast<Motion>(raw); break;
        case Field::location: s.context.location = static_cast<Location>(raw); break;
        case Field::time_of_day: s.context.time_of_day = static_cast<TimeOfDay>(raw); break;
        case Field::day_of_week: s.context.day_of_week = static_cast<DayOfWeek>(raw); break;
        case Field::activity_type: s.bci.activity_type = static_cast<ActivityType>(raw); break;
        case Field::dose: s.bci.dose = raw; break;
        case Field::delivery_schedule: s.bci.delivery_schedule = static_cast<DeliverySchedule>(raw); break;
        case Field::message_phrasing: s.bci.message_phrasing = static_cast<MessagePhrasing>(raw); break;
        case Field::message_content: s.bci.message_content = static_cast<MessageContent>(raw); break;
        case Field::mat_m:
        case Field::mat_a:
        case Field::mat_t: {
            if (!s.mat) s.mat = MatVector{};
            (f == Field::mat_m ? s.mat->motivation : f == Field::mat_a ? s.mat->ability : s.mat->trigger) = raw;
            break;
        }
    }
}

FeatureRow extract_row(const FeatureSchema& schema, const Sample& s) {
    FeatureRow row;
    row.reserve(schema.size());
    for (const auto& d : schema.features) row.push_back(get_field(s, d.field));
    return row;
}

void apply_row(const FeatureSchema& schema, std::span<const int> row, Sample& s) {
    if (row.size() != schema.size()) throw ValidationError("row width does not match schema");
    for (std::size_t i = 0; i < row.size(); ++i) set_field(s, schema.features[i].field, row[i]);
}

void validate(const Sample& s) {
    if (s.patient_id < 0) throw SchemaViolation("patient_id", "must be >= 0");
    for (auto i = static_cast<std::size_t>(Field::age); i <= static_cast<std::size_t>(Field::message_content); ++i) {
        auto f = static_cast<Field>(i);
        auto d = describe(f);
        int v = get_field(s, f);
        if (!d.contains(v)) throw SchemaViolation(std::string(d.name()), "value " + std::to_string(v) + " out of domain");
    }
    if (s.mat) {
        for (Field f : {Field::mat_m, Field::mat_a, Field::mat_t}) {
            int v = get_field(s, f);
            if (v < kScoreMin || v > kScoreMax)
                throw SchemaViolation(std::string(field_name(f)), "value " + std::to_string(v) + " out of domain");
        }
    }
    if (s.behaviour != 0 && s.behaviour != 1) throw SchemaViolation("behaviour", "must be 0 or 1");
    if (s.day_index < 0) throw SchemaViolation("day_index", "must be >= 0");
}

void validate(const PatientProfile& p) {
    if (p.patient_id < 0) throw SchemaViolation("patient_id", "must be >= 0");
    if (p.traits.age < kAgeMin || p.traits.age > kAgeMax) throw SchemaViolation("age", "out of [18, 90]");
    if (static_cast<int>(p.traits.gender) > 2) throw SchemaViolation("gender", "out of domain");
    if (p.traits.motivation_at_enrollment < kScoreMin || p.traits.motivation_at_enrollment > kScoreMax)
        throw SchemaViolation("motivation_at_enrollment", "out of [0, 4]");
    if (p.action_threshold < kThresholdMin || p.action_threshold > kThresholdMax)
        throw SchemaViolation("action_threshold", "out of [0, 64]");
}

}  // namespace bcip
