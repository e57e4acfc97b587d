#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gridalign/calendar.hpp"
#include "gridalign/tariff.hpp"

namespace gridalign {

enum class Unit { UsdPerKwh, UsdPerMwh, KgCo2ePerMwh };

std::string_view to_string(Unit u);
Unit parse_unit(std::string_view text);

/// Missing samples are NaN throughout this module.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Consecutive hourly samples starting at `start`.
struct HourlySeries {
    std::string label;
    Unit unit = Unit::UsdPerKwh;
    DateHour start;
    std::vector<double> values;

    DateHour time_at(std::size_t i) const { return add_hours(start, static_cast<std::int64_t>(i)); }
};

/// Sub-hourly samples with explicit timestamps, e.g. 5- or 15-minute prices.
struct TimedSample {
    EpochMinutes minutes = 0;
    double value = kMissing;
};

struct SubHourlySeries {
    std::string label;
    Unit unit = Unit::UsdPerMwh;
    std::vector<TimedSample> samples;
};

/// 12 x 24 representative values: cell(m, h) averages every hour h of month m.
struct MonthHourMatrix {
    std::string label;
    Unit unit = Unit::UsdPerKwh;
    std::array<std::array<double, 24>, 12> cells{};
    std::array<std::array<int, 24>, 12> counts{};

    MonthHourMatrix();

    /// month is 1-based.
    double cell(int month, int hour) const { return cells[month - 1][hour]; }
    int count(int month, int hour) const { return counts[month - 1][hour]; }
    std::array<double, 24> const& month_row(int month) const { return cells[month - 1]; }
};

class ReconcileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AlignmentError : public ReconcileError {
public:
    using ReconcileError::ReconcileError;
};

struct FlattenOptions {
    double reference_kw = 1000.0;
    /// Restrict to one charge kind; customer charges are never included.
    std::optional<ChargeKind> only_kind;
};

struct FlattenResult {
    HourlySeries series;  // $/kWh
    /// 1 MW bill total without customer charges, for conservation checks.
    double usage_bill = 0.0;
    std::vector<std::string> warnings;
};

/// Converts a tariff into an hourly $/kWh series for a flat reference load
/// over `year`. Every energy and demand item's dollars in each billing period
/// (month, or day for daily demand) are spread evenly over that item's active
/// hours in the period and divided by the hourly reference energy.
FlattenResult flatten_tariff(TariffSchedule const& s, int year, FlattenOptions const& options = {});

/// Hourly means of uniformly spaced sub-hourly samples. An hour with any
/// missing or absent sub-step is missing. Throws ReconcileError for
/// non-uniform steps or steps that do not divide 60 minutes.
HourlySeries resample_to_hourly(SubHourlySeries const& series);

MonthHourMatrix month_hour_average(HourlySeries const& series);

/// The month's hour vectors restricted to hours present in both matrices.
/// Throws AlignmentError with fewer than two common hours.
std::pair<std::vector<double>, std::vector<double>> align(MonthHourMatrix const& a, MonthHourMatrix const& b,
                                                          int month);

// CSV surfaces -------------------------------------------------------------

std::string serialize_hourly(HourlySeries const& s);
HourlySeries parse_hourly(std::string_view text, std::string label, Unit unit);
/// Reads `timestamp,value` at any uniform step; hourly input passes through.
SubHourlySeries parse_timed(std::string_view text, std::string label, Unit unit);
/// Resamples when the step is sub-hourly, otherwise reads as hourly.
HourlySeries parse_price_series(std::string_view text, std::string label, Unit unit);

std::string serialize_matrix(MonthHourMatrix const& m);
MonthHourMatrix parse_matrix(std::string_view text, std::string label, Unit unit);
/// `<label>__<unit>.csv`
std::string matrix_filename(MonthHourMatrix const& m);
std::optional<std::pair<std::string, Unit>> parse_matrix_filename(std::string_view filename);

}  // namespace gridalign
