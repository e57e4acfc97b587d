#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridalign/reconcile.hpp"
#include "gridalign/tariff.hpp"

namespace gridalign {

/// Sample Pearson coefficient. Undefined (nullopt) when either vector is
/// constant or shorter than 2. Throws std::invalid_argument on length mismatch.
std::optional<double> pearson(std::span<double const> x, std::span<double const> y);

// Categorization -------------------------------------------------------------

enum class TariffCategory { Flat, SeasonalTOU, NonseasonalTOU, SeasonalNonTOU };

std::string_view to_string(TariffCategory c);

struct CategoryResult {
    TariffCategory energy = TariffCategory::Flat;
    TariffCategory demand = TariffCategory::Flat;
    TariffCategory overall = TariffCategory::Flat;

    friend bool operator==(CategoryResult const&, CategoryResult const&) = default;
};

TariffCategory category_from(bool varies_monthly, bool varies_within_month);

/// Classifies each charge kind, and the tariff as a whole, by whether the
/// price schedule changes between months and whether it changes across hours
/// or weekdays within a month. Customer charges are ignored.
CategoryResult categorize(TariffSchedule const& s);

// Premiums and correlations -------------------------------------------------

struct Premium {
    std::optional<double> ratio;
    /// Why the ratio is undefined; empty when defined.
    std::string reason;
};

/// Max over min of the month's present cells. Undefined when the minimum is
/// not positive. Throws ReconcileError when every cell is missing.
Premium peak_premium(MonthHourMatrix const& m, int month);

/// As peak_premium, restricted to strictly positive cells (active hours).
Premium active_premium(MonthHourMatrix const& m, int month);

struct CorrelationRecord {
    std::string label_a;
    std::string label_b;
    std::string region;
    int month = 1;
    std::optional<double> r;
    std::size_t n = 0;
};

struct SignalPair {
    std::string region;
    MonthHourMatrix a;
    MonthHourMatrix b;
};

/// One record per (pair, month), in input order then month order.
std::vector<CorrelationRecord> correlation_table(std::span<SignalPair const> pairs);

struct FlipResult {
    double fraction = 0.0;
    std::size_t flips = 0;
    /// Nodes with an exact zero in either month; never counted as flips.
    std::size_t zeros = 0;
    std::size_t nodes = 0;
};

/// Share of common nodes whose coefficient changes strict sign between two
/// months. Throws std::invalid_argument when no node is shared.
FlipResult flip_fraction(std::map<std::string, double> const& month_a, std::map<std::string, double> const& month_b);

// Regime map ----------------------------------------------------------------

struct TariffMonthValue {
    std::string tariff_id;
    std::string region;
    int month = 1;
    std::optional<double> value;
};

struct RegimeRow {
    std::string tariff_id;
    std::string region;
    int month = 1;
    std::optional<double> peak_premium;
    std::optional<double> r_aef_tariff;
};

struct RegimeBox {
    std::string region;
    double ibdr_min_rate = 0.0;
    double ibdr_max_rate = 0.0;
};

struct RegimeMap {
    std::vector<RegimeRow> rows;
    std::vector<RegimeBox> boxes;
    std::size_t dropped = 0;
};

/// Joins premiums and correlations on (tariff_id, month); entries without a
/// partner are dropped and counted. Boxes are emitted for regions that appear
/// in the rows and have an IBDR payment range.
RegimeMap regime_map(std::span<TariffMonthValue const> premiums, std::span<TariffMonthValue const> correlations,
                     std::map<std::string, std::pair<double, double>> const& ibdr_ranges);

// Summary statistics --------------------------------------------------------

struct SeasonSpec {
    std::set<int> summer_months = {6, 7, 8, 9};
    bool is_summer(int month) const { return summer_months.contains(month); }
};

/// Flattened charges of one tariff at the reference load.
struct TariffProfile {
    std::string tariff_id;
    MonthHourMatrix energy;    // $/kWh
    MonthHourMatrix demand;    // $/kWh, demand dollars spread over active hours
    MonthHourMatrix combined;  // energy + demand
    std::array<double, 12> energy_sum{};         // sum of hourly $/kWh per month
    std::array<int, 12> hours{};                 // hours per month
    std::array<double, 12> demand_usd_per_kw{};  // monthly demand bill / reference kW
    bool has_energy = false;
    bool has_demand = false;
};

TariffProfile profile_tariff(TariffSchedule const& s, int year, double reference_kw = 1000.0);

struct SeasonStats {
    std::string season;  // "summer" | "winter"
    std::string kind;    // "energy" ($/kWh) | "demand" ($/kW)
    std::size_t n_tariffs = 0;
    double mean_charge = 0.0;
    std::size_t n_spread = 0;
    double mean_spread = kMissing;
    double p95_spread = kMissing;
};

/// Per-season cross-tariff means of the time-averaged energy ($/kWh) and
/// demand ($/kW) charges, and the distribution of per-tariff peak/off-peak
/// spreads. Tariffs without a charge kind do not enter that kind's rows.
std::vector<SeasonStats> summary_stats(std::span<TariffProfile const> profiles, SeasonSpec const& seasons = {});

/// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

struct CategoryShares {
    std::map<TariffCategory, double> energy;
    std::map<TariffCategory, double> demand;
    std::map<TariffCategory, double> overall;
};

/// Fractions in [0, 1] per category (every category present, possibly 0).
CategoryShares category_shares(std::span<CategoryResult const> results);

}  // namespace gridalign
