#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridalign {

/// Columns of the demand-response program table, in file order.
enum class ProgramField : std::size_t {
    MinDays, MaxDays, MinDur, MaxDur, StartTime, EndTime, MaxEvents, MaxHours, EventsDaily, MaxConsec,
    NotifType, NotifTime, NotifDelt, BaseMethod, HistPres, PayFunction, Region, Dow, Season, Elig,
    Comp, Sm, Em, State, Util, Trigger, Load, ProgramRate, FunctionBase, DeliveredRatio,
    AmountReduced, Weekends, Holidays, PrevEvents, BaseHours, RangeVal, RangeRes, BaseDates, Function, FirmLevel,
};

inline constexpr std::size_t kProgramFieldCount = 40;

struct ParameterInfo {
    std::string column_name;
    std::string column_id;
    std::string description;

    friend bool operator==(ParameterInfo const&, ParameterInfo const&) = default;
};

/// Built-in schema, one entry per ProgramField.
std::array<ParameterInfo, kProgramFieldCount> const& program_schema();
std::string_view column_id(ProgramField f);
std::optional<ProgramField> parse_column_id(std::string_view id);

inline constexpr std::string_view kMissingMarker = "n/a";

class ProgramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One incentive-based demand-response program. Every field may be missing.
class IbdrProgram {
public:
    std::optional<std::string> const& get(ProgramField f) const { return values_[index(f)]; }
    void set(ProgramField f, std::optional<std::string> value) { values_[index(f)] = std::move(value); }
    bool has(ProgramField f) const { return get(f).has_value(); }

    /// Numeric view of a field. Throws ProgramError when present but not numeric.
    std::optional<double> number(ProgramField f) const;
    /// yes/no style inclusion flags; nullopt when missing or unrecognized.
    std::optional<bool> flag(ProgramField f) const;

    std::size_t populated_count() const;

    /// Columns outside the schema, preserved for round-trips.
    std::vector<std::pair<std::string, std::string>> extras;

    friend bool operator==(IbdrProgram const&, IbdrProgram const&) = default;

private:
    static std::size_t index(ProgramField f) { return static_cast<std::size_t>(f); }
    std::array<std::optional<std::string>, kProgramFieldCount> values_{};
};

/// Throws ProgramError naming every schema column absent from the header.
std::vector<IbdrProgram> parse_programs(std::string_view text);
std::string serialize_programs(std::vector<IbdrProgram> const& programs);

std::vector<ParameterInfo> parse_parameter_metadata(std::string_view text);
std::string serialize_parameter_metadata(std::span<ParameterInfo const> params);

/// Invariant violations (duration order, range_val, non-negative rates).
std::vector<std::string> validate_program(IbdrProgram const& p);

// Evaluation ---------------------------------------------------------------

struct Date {
    int year = 2000;
    int month = 1;
    int day = 1;

    friend bool operator==(Date const&, Date const&) = default;
    friend auto operator<=>(Date const&, Date const&) = default;
};

struct DayLoad {
    Date date;
    std::array<double, 24> kw{};
    /// A demand-response event was called on this day.
    bool event_day = false;
};

struct Baseline {
    std::vector<int> hours;
    std::vector<double> kw;
    std::vector<Date> days_used;
    bool from_firm_level = false;
};

class BaselineInfeasible : public ProgramError {
public:
    using ProgramError::ProgramError;
};

class UnsupportedMethod : public ProgramError {
public:
    using ProgramError::ProgramError;
};

enum class Aggregation { Mean, Max, Median };

/// Parses `function`; missing means mean. Throws UnsupportedMethod.
Aggregation baseline_aggregation(IbdrProgram const& p);

/// Hours of day named by `base_hours` ("12-18" end-exclusive, "9,10,11",
/// or a mix); all 24 when missing.
std::vector<int> baseline_hours(IbdrProgram const& p);

/// Most recent `range_val` eligible days before `event_date`, aggregated per
/// baseline hour. Days are dropped when the program excludes weekends,
/// holidays, or previous event days. A `firm_level` short-circuits to a
/// constant baseline.
Baseline compute_baseline(IbdrProgram const& p, std::span<DayLoad const> history, Date event_date,
                          std::set<Date> const& holidays = {});

enum class RateBasis { PerKw, PerKwh };

struct PaymentResult {
    double payment = 0.0;
    /// Undefined without a positive nomination.
    std::optional<double> delivered_ratio;
    std::vector<double> amount_reduced;  // kW per event hour
};

/// Settles one event of metered.size() hours against the baseline.
PaymentResult compute_payment(IbdrProgram const& p, std::span<double const> baseline_kw,
                              std::span<double const> metered_kw, double nomination_kw, double rate,
                              RateBasis basis);

struct DurationBounds {
    double min_hours = 1.0;
    double max_hours = 6.3;
};

inline constexpr double kDefaultMinDurationHours = 1.0;
/// Longest event duration observed across the program corpus.
inline constexpr double kDefaultMaxDurationHours = 6.3;

DurationBounds duration_bounds(IbdrProgram const& p);

/// Hours of consumption a per-kW payment buys at a reference energy price.
double equivalent_hours(double payment_usd_per_kw, double reference_usd_per_kwh);

struct PaymentRate {
    double value = 0.0;  // $/kW or $/kWh
    RateBasis basis = RateBasis::PerKw;
};

/// Extracts a rate such as "$40/kW", "0.5 $/kWh" or "$500/MWh" from free text.
std::optional<PaymentRate> parse_payment_rate(std::string_view text);

}  // namespace gridalign
