#pragma once

#include <string>
#include <vector>

#include "gridalign/reconcile.hpp"

namespace gridalign {

/// Hourly generation (MWh per hour) and emissions (kg CO2-eq per hour) for
/// one region, consecutive from `start`. NaN marks a missing hour.
struct GenEmisSeries {
    std::string region;
    DateHour start;
    std::vector<double> generation_mwh;
    std::vector<double> emissions_kg;
};

/// Ratio of means per (month, hour) cell: mean emissions / mean generation.
/// Cells with no data or non-positive mean generation are missing.
MonthHourMatrix average_aef(GenEmisSeries const& series);

/// Marginal emissions per (month, hour): least-squares slope through the
/// origin of first differences dE on dG. A difference pairs hour t with
/// hour t-1 of the same month. Cells with fewer than two pairs or no
/// generation variation are missing.
MonthHourMatrix estimate_mef(GenEmisSeries const& series);

struct RatioSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t cells = 0;
};

/// Cellwise mef / aef over cells present in both (and aef != 0).
/// Throws ReconcileError when there are none.
RatioSummary mef_aef_summary(MonthHourMatrix const& mef, MonthHourMatrix const& aef);

/// `timestamp,generation_mwh,emissions_kg`
GenEmisSeries parse_gen_emis(std::string_view text, std::string region);
std::string serialize_gen_emis(GenEmisSeries const& s);

}  // namespace gridalign
