#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gridalign/calendar.hpp"
#include "gridalign/tariff.hpp"

namespace gridalign {

/// Uniform hourly average power, kW. Index i covers [start + i h, start + (i+1) h).
struct LoadProfile {
    DateHour start;
    std::vector<double> kw;

    /// Whole calendar months starting at `start` with a constant draw.
    static LoadProfile flat(int year, int first_month, int months, double kw);
    static LoadProfile flat_year(int year, double kw) { return flat(year, 1, 12, kw); }
};

class BillingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dollar contribution of one item in one billing period. Monthly periods are
/// labelled `YYYY-MM`; days of a daily-assessed demand item `YYYY-MM-DD`.
struct ItemCharge {
    std::size_t item_index = 0;
    std::string charge_family;
    ChargeKind kind = ChargeKind::Energy;
    std::string period;
    double amount = 0.0;
    /// kWh in window (energy) or window peak kW (demand); 0 for customer.
    double quantity = 0.0;
    /// Load indices [period_begin, period_end) spanned by the period.
    std::size_t period_begin = 0;
    std::size_t period_end = 0;
    std::size_t active_hours = 0;
};

struct PeakRecord {
    std::size_t item_index = 0;
    std::string charge_family;
    std::string period;
    double peak_kw = 0.0;
    /// Earliest load index attaining the peak.
    std::size_t peak_index = 0;
    bool tied = false;
};

struct BillBreakdown {
    std::string tariff_id;
    double total = 0.0;
    std::vector<ItemCharge> per_item;
    std::vector<PeakRecord> peaks;
    std::vector<std::string> warnings;

    /// Sum of per-item amounts excluding customer charges.
    double usage_total() const;
};

/// Throws BillingError when the load is not whole calendar months or has
/// negative/non-finite values, ValidationError when the schedule is invalid.
void check_load(LoadProfile const& load);

/// Exact bill: block pricing per tier, demand peaks per month (or per day for
/// daily assessment), overlapping items charged independently. Summation
/// order is load order within an item, then item order.
BillBreakdown compute_bill(TariffSchedule const& s, LoadProfile const& load);

struct PeakAttribution {
    std::size_t item_index = 0;
    std::string period;
    std::size_t peak_index = 0;
    /// d(bill)/d(kW at the peak hour) at the linearization point.
    double marginal_usd_per_kw = 0.0;
    bool tied = false;
};

/// bill(e) ~ sum_t coefficients[t] * e[t] + constant, e in kWh per hour.
/// Tier blocks are fixed at the linearization load; demand charges enter the
/// constant, with their peak-hour sensitivities listed separately.
struct ChargeFunction {
    std::vector<double> coefficients;  // $/kWh
    double constant = 0.0;             // $
    std::vector<PeakAttribution> peaks;
    bool has_ties = false;

    double evaluate(std::span<double const> energy_kwh) const;
};

ChargeFunction build_charge_function(TariffSchedule const& s, LoadProfile const& load);

inline constexpr std::string_view kBillHeader = "tariff_id,period,charge_family,kind,amount_usd";
std::string serialize_bill(BillBreakdown const& bill);

}  // namespace gridalign
