#include "gridalign/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <tuple>

#include <fmt/format.h>

#include "gridalign/billing.hpp"

namespace gridalign {

std::optional<double> pearson(std::span<double const> x, std::span<double const> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument(fmt::format("pearson needs equal lengths, got {} and {}", x.size(), y.size()));
    }
    std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    auto constant = [](std::span<double const> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) return std::nullopt;

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

std::string_view to_string(TariffCategory c) {
    switch (c) {
        case TariffCategory::Flat: return "Flat";
        case TariffCategory::SeasonalTOU: return "SeasonalTOU";
        case TariffCategory::NonseasonalTOU: return "NonseasonalTOU";
        case TariffCategory::SeasonalNonTOU: return "SeasonalNonTOU";
    }
    return "?";
}

TariffCategory category_from(bool varies_monthly, bool varies_within_month) {
    if (varies_monthly) {
        return varies_within_month ? TariffCategory::SeasonalTOU : TariffCategory::SeasonalNonTOU;
    }
    return varies_within_month ? TariffCategory::NonseasonalTOU : TariffCategory::Flat;
}

namespace {

/// Marginal price as a step function of usage: (quantity where a step
/// begins, price from there on). Zero-price steps are dropped from the tail.
using PriceCurve = std::vector<std::pair<double, double>>;

enum Component { kEnergy = 0, kDemandMonthly = 1, kDemandDaily = 2, kComponents = 3 };

Component component_of(ChargeItem const& item) {
    if (item.kind == ChargeKind::Energy) return kEnergy;
    return item.assessed == Assessment::Monthly ? kDemandMonthly : kDemandDaily;
}

PriceCurve price_curve(TariffSchedule const& s, std::vector<std::size_t> const& active) {
    std::vector<double> breaks = {0.0};
    for (auto i : active) {
        breaks.push_back(s.items[i].tier_floor);
        double c = tier_ceiling(s, i);
        if (std::isfinite(c)) breaks.push_back(c);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    PriceCurve curve;
    for (double q : breaks) {
        double price = 0.0;
        for (auto i : active) {
            if (q >= s.items[i].tier_floor && q < tier_ceiling(s, i)) price += s.items[i].rate;
        }
        if (curve.empty() || curve.back().second != price) curve.emplace_back(q, price);
    }
    while (!curve.empty() && curve.back().second == 0.0) curve.pop_back();
    return curve;
}

bool same_curve(PriceCurve const& a, PriceCurve const& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first) return false;
        double scale = std::max({std::abs(a[i].second), std::abs(b[i].second), 1e-300});
        if (std::abs(a[i].second - b[i].second) > 1e-12 * scale) return false;
    }
    return true;
}

/// cells[month][weekday][hour][component]
using CurveGrid = std::array<std::array<std::array<std::array<PriceCurve, kComponents>, 24>, 7>, 12>;

struct Variation {
    bool monthly = false;
    bool within_month = false;
};

Variation variation(CurveGrid const& grid, std::initializer_list<Component> comps) {
    auto equal = [&](auto const& a, auto const& b) {
        for (auto c : comps) {
            if (!same_curve(a[c], b[c])) return false;
        }
        return true;
    };
    Variation v;
    for (int m = 0; m < 12; ++m) {
        auto const& ref = grid[m][0][0];
        for (int d = 0; d < 7; ++d) {
            for (int h = 0; h < 24; ++h) {
                if (!equal(grid[m][d][h], ref)) v.within_month = true;
                if (m > 0 && !equal(grid[m][d][h], grid[0][d][h])) v.monthly = true;
            }
        }
    }
    return v;
}

}  // namespace

CategoryResult categorize(TariffSchedule const& s) {
    if (auto v = validate_schedule(s); !v.empty()) {
        throw ValidationError(std::move(v));
    }
    auto grid = std::make_unique<CurveGrid>();
    for (int m = 1; m <= 12; ++m) {
        for (int d = 0; d < 7; ++d) {
            for (int h = 0; h < 24; ++h) {
                std::array<std::vector<std::size_t>, kComponents> active;
                for (std::size_t i = 0; i < s.items.size(); ++i) {
                    auto const& item = s.items[i];
                    if (item.kind == ChargeKind::Customer || !item.is_active(m, d, h)) continue;
                    active[component_of(item)].push_back(i);
                }
                for (int c = 0; c < kComponents; ++c) {
                    (*grid)[m - 1][d][h][c] = price_curve(s, active[c]);
                }
            }
        }
    }
    auto energy = variation(*grid, {kEnergy});
    auto demand = variation(*grid, {kDemandMonthly, kDemandDaily});
    auto overall = variation(*grid, {kEnergy, kDemandMonthly, kDemandDaily});
    return CategoryResult{category_from(energy.monthly, energy.within_month),
                          category_from(demand.monthly, demand.within_month),
                          category_from(overall.monthly, overall.within_month)};
}

// ---------------------------------------------------------------------------

namespace {

Premium premium_over(MonthHourMatrix const& m, int month, bool positive_only) {
    if (month < 1 || month > 12) throw std::invalid_argument(fmt::format("month {} out of range", month));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t present = 0;
    for (double v : m.month_row(month)) {
        if (is_missing(v)) continue;
        ++present;
        if (positive_only && !(v > 0.0)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (present == 0) {
        throw ReconcileError(fmt::format("'{}' has no values in month {}", m.label, month));
    }
    if (positive_only && !std::isfinite(lo)) {
        return Premium{std::nullopt, "no active hours"};
    }
    if (!(lo > 0.0)) {
        return Premium{std::nullopt, "non-positive minimum"};
    }
    return Premium{hi / lo, {}};
}

}  // namespace

Premium peak_premium(MonthHourMatrix const& m, int month) { return premium_over(m, month, false); }

Premium active_premium(MonthHourMatrix const& m, int month) { return premium_over(m, month, true); }

std::vector<CorrelationRecord> correlation_table(std::span<SignalPair const> pairs) {
    std::vector<CorrelationRecord> out;
    for (auto const& p : pairs) {
        for (int month = 1; month <= 12; ++month) {
            CorrelationRecord rec{p.a.label, p.b.label, p.region, month, std::nullopt, 0};
            try {
                auto [x, y] = align(p.a, p.b, month);
                rec.n = x.size();
                rec.r = pearson(x, y);
            } catch (AlignmentError const&) {
                for (int h = 0; h < 24; ++h) {
                    if (!is_missing(p.a.cell(month, h)) && !is_missing(p.b.cell(month, h))) ++rec.n;
                }
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

FlipResult flip_fraction(std::map<std::string, double> const& month_a, std::map<std::string, double> const& month_b) {
    FlipResult out;
    for (auto const& [node, ra] : month_a) {
        auto it = month_b.find(node);
        if (it == month_b.end()) continue;
        double rb = it->second;
        ++out.nodes;
        if (ra == 0.0 || rb == 0.0) {
            ++out.zeros;
        } else if ((ra > 0.0) != (rb > 0.0)) {
            ++out.flips;
        }
    }
    if (out.nodes == 0) {
        throw std::invalid_argument("flip_fraction: the two months share no nodes");
    }
    out.fraction = static_cast<double>(out.flips) / static_cast<double>(out.nodes);
    return out;
}

RegimeMap regime_map(std::span<TariffMonthValue const> premiums, std::span<TariffMonthValue const> correlations,
                     std::map<std::string, std::pair<double, double>> const& ibdr_ranges) {
    std::map<std::pair<std::string, int>, TariffMonthValue const*> corr_by_key;
    for (auto const& c : correlations) {
        corr_by_key.emplace(std::pair{c.tariff_id, c.month}, &c);
    }
    RegimeMap out;
    std::set<std::pair<std::string, int>> matched;
    for (auto const& p : premiums) {
        auto key = std::pair{p.tariff_id, p.month};
        auto it = corr_by_key.find(key);
        if (it == corr_by_key.end()) {
            ++out.dropped;
            continue;
        }
        matched.insert(key);
        out.rows.push_back(RegimeRow{p.tariff_id, p.region, p.month, p.value, it->second->value});
    }
    for (auto const& [key, ptr] : corr_by_key) {
        if (!matched.contains(key)) ++out.dropped;
    }
    out.dropped += correlations.size() - corr_by_key.size();  // duplicate keys

    std::set<std::string> regions;
    for (auto const& r : out.rows) regions.insert(r.region);
    for (auto const& region : regions) {
        if (auto it = ibdr_ranges.find(region); it != ibdr_ranges.end()) {
            out.boxes.push_back(RegimeBox{region, it->second.first, it->second.second});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

TariffProfile profile_tariff(TariffSchedule const& s, int year, double reference_kw) {
    TariffProfile p;
    p.tariff_id = s.tariff_id;
    FlattenOptions energy_opts{reference_kw, ChargeKind::Energy};
    FlattenOptions demand_opts{reference_kw, ChargeKind::Demand};
    auto energy = flatten_tariff(s, year, energy_opts);
    auto demand = flatten_tariff(s, year, demand_opts);

    HourlySeries combined = energy.series;
    for (std::size_t t = 0; t < combined.values.size(); ++t) {
        combined.values[t] += demand.series.values[t];
    }
    p.energy = month_hour_average(energy.series);
    p.demand = month_hour_average(demand.series);
    p.combined = month_hour_average(combined);
    p.energy.label = p.demand.label = p.combined.label = s.tariff_id;

    for (std::size_t t = 0; t < energy.series.values.size(); ++t) {
        int m = energy.series.time_at(t).month;
        p.energy_sum[m - 1] += energy.series.values[t];
        p.hours[m - 1] += 1;
        // $/kWh x reference kWh per hour / reference kW = $/kW
        p.demand_usd_per_kw[m - 1] += demand.series.values[t];
    }
    for (auto const& item : s.items) {
        if (item.kind == ChargeKind::Energy) p.has_energy = true;
        if (item.kind == ChargeKind::Demand) p.has_demand = true;
    }
    return p;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return kMissing;
    std::sort(values.begin(), values.end());
    double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<SeasonStats> summary_stats(std::span<TariffProfile const> profiles, SeasonSpec const& seasons) {
    std::vector<SeasonStats> out;
    for (bool summer : {true, false}) {
        for (bool energy : {true, false}) {
            SeasonStats st;
            st.season = summer ? "summer" : "winter";
            st.kind = energy ? "energy" : "demand";
            double charge_sum = 0.0;
            std::vector<double> spreads;
            for (auto const& p : profiles) {
                if (energy ? !p.has_energy : !p.has_demand) continue;
                double total = 0.0;
                double weight = 0.0;
                double spread_sum = 0.0;
                int spread_months = 0;
                for (int m = 1; m <= 12; ++m) {
                    if (seasons.is_summer(m) != summer) continue;
                    if (energy) {
                        total += p.energy_sum[m - 1];
                        weight += p.hours[m - 1];
                    } else {
                        total += p.demand_usd_per_kw[m - 1];
                        weight += 1.0;
                    }
                    auto prem = active_premium(energy ? p.energy : p.demand, m);
                    if (prem.ratio) {
                        spread_sum += *prem.ratio;
                        ++spread_months;
                    }
                }
                if (weight == 0.0) continue;
                ++st.n_tariffs;
                charge_sum += total / weight;
                if (spread_months > 0) spreads.push_back(spread_sum / spread_months);
            }
            st.mean_charge = st.n_tariffs > 0 ? charge_sum / static_cast<double>(st.n_tariffs) : kMissing;
            st.n_spread = spreads.size();
            if (!spreads.empty()) {
                double s = 0.0;
                for (double v : spreads) s += v;
                st.mean_spread = s / static_cast<double>(spreads.size());
                st.p95_spread = percentile(spreads, 95.0);
            }
            out.push_back(std::move(st));
        }
    }
    return out;
}

CategoryShares category_shares(std::span<CategoryResult const> results) {
    CategoryShares shares;
    for (auto c : {TariffCategory::Flat, TariffCategory::SeasonalTOU, TariffCategory::NonseasonalTOU,
                   TariffCategory::SeasonalNonTOU}) {
        shares.energy[c] = shares.demand[c] = shares.overall[c] = 0.0;
    }
    if (results.empty()) return shares;
    double w = 1.0 / static_cast<double>(results.size());
    for (auto const& r : results) {
        shares.energy[r.energy] += w;
        shares.demand[r.demand] += w;
        shares.overall[r.overall] += w;
    }
    return shares;
}

}  // namespace gridalign
