#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gridalign/calendar.hpp"

namespace gridalign {

enum class ChargeKind { Energy, Demand, Customer };
enum class Assessment { Monthly, Daily };
enum class Bundling { Bundled, DeliveryOnly };

std::string_view to_string(ChargeKind kind);
std::string_view to_string(Assessment a);
std::string_view to_string(Bundling b);
ChargeKind parse_charge_kind(std::string_view text);
Assessment parse_assessment(std::string_view text);
Bundling parse_bundling(std::string_view text);

/// One row of a tariff file: a windowed, possibly tiered charge.
///
/// Windows are inclusive on months and weekdays and half-open on hours,
/// i.e. the item is active at hour h of a day when hour_start <= h < hour_end.
/// Weekdays are numbered 0 = Monday through 6 = Sunday. Customer charges
/// carry window fields but ignore them.
struct ChargeItem {
    ChargeKind kind = ChargeKind::Energy;
    std::string charge_family;
    double rate = 0.0;        // $/kWh, $/kW, or $/billing period
    double tier_floor = 0.0;  // kWh per period (energy) or kW (demand)
    int month_start = 1;
    int month_end = 12;
    int weekday_start = 0;
    int weekday_end = 6;
    int hour_start = 0;
    int hour_end = 24;
    Assessment assessed = Assessment::Monthly;

    /// Window test; always true for customer charges.
    bool is_active(DateHour const& t) const;
    bool is_active(int month, int weekday, int hour) const;
    bool in_month(int month) const { return month >= month_start && month <= month_end; }

    friend bool operator==(ChargeItem const&, ChargeItem const&) = default;
};

struct TariffSchedule {
    std::string tariff_id;
    std::vector<ChargeItem> items;
    Bundling bundling = Bundling::Bundled;

    friend bool operator==(TariffSchedule const&, TariffSchedule const&) = default;
};

struct Violation {
    std::size_t item_index = 0;
    std::string field;
    std::string rule;

    friend bool operator==(Violation const&, Violation const&) = default;
};

std::string describe(Violation const& v);

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    std::vector<Violation> const& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

inline constexpr std::string_view kTariffHeader =
    "kind,charge_family,rate,tier_floor,month_start,month_end,weekday_start,weekday_end,"
    "hour_start,hour_end,assessed";

/// Every type invariant that fails, in item order. Empty means valid.
std::vector<Violation> validate_schedule(TariffSchedule const& s);

/// Upper bound of the block an item prices: the next larger tier floor in
/// the same (kind, family), or +infinity.
double tier_ceiling(TariffSchedule const& s, std::size_t item_index);

/// Parses a tariff CSV. Unknown columns are ignored and reported through
/// `warnings`. Throws ParseError for malformed rows, ValidationError when the
/// parsed schedule breaks an invariant.
TariffSchedule parse_tariff(std::string_view text, std::string tariff_id = {},
                            Bundling bundling = Bundling::Bundled,
                            std::vector<std::string>* warnings = nullptr);

std::string serialize_tariff(TariffSchedule const& s);

/// Splits `<tariff_id>_<bundled|delivery_only>.csv`.
struct TariffFileName {
    std::string tariff_id;
    Bundling bundling = Bundling::Bundled;
};
std::optional<TariffFileName> parse_tariff_filename(std::string_view filename);
std::string tariff_filename(std::string_view tariff_id, Bundling bundling);

/// Reads a tariff file from disk; id and bundling come from the filename.
TariffSchedule load_tariff_file(std::string const& path, std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Metadata

enum class Sector { Industrial, Commercial, Residential, Other };
std::string_view to_string(Sector s);
Sector parse_sector(std::string_view text);

struct TariffMetadata {
    std::string tariff_id;
    std::string utility_name;
    long long eia_id = 0;
    std::string zip;
    std::optional<double> latitude;
    std::optional<double> longitude;
    Sector sector = Sector::Commercial;
    std::string service_type;
    std::string iso_label;

    // Optional applicability columns; absent in the base format.
    std::optional<std::string> start_date;  // YYYY-MM-DD
    std::optional<std::string> end_date;
    std::optional<double> min_peak_kw;
    std::optional<double> max_peak_kw;

    friend bool operator==(TariffMetadata const&, TariffMetadata const&) = default;
};

inline constexpr std::string_view kMetadataHeader =
    "tariff_id,utility_name,eia_id,zip,latitude,longitude,sector,service_type,iso_label";

std::vector<TariffMetadata> parse_metadata(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string serialize_metadata(std::vector<TariffMetadata> const& rows);

struct FilterCriteria {
    std::set<Sector> sectors;                // empty = any
    std::set<std::string> service_types;     // case-insensitive; empty = any
    std::optional<std::string> effective_on; // YYYY-MM-DD: start before, end after
    std::optional<double> reference_demand_kw;

    /// The screening used for the bundled commercial/industrial set.
    static FilterCriteria screening_defaults(int year = 2023);
};

/// Rows that meet every set criterion. A row missing the column a criterion
/// needs is not excluded by that criterion.
std::vector<TariffMetadata> filter_applicable(std::vector<TariffMetadata> const& rows,
                                              FilterCriteria const& criteria);

}  // namespace gridalign
