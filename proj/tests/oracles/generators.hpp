#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gridalign/billing.hpp"
#include "gridalign/tariff.hpp"

namespace gen {

inline gridalign::ChargeItem random_window(std::mt19937_64& rng, gridalign::ChargeItem it) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    it.month_start = pick(1, 12);
    it.month_end = pick(it.month_start, 12);
    if (pick(0, 2) == 0) {
        it.month_start = 1;
        it.month_end = 12;
    }
    it.weekday_start = pick(0, 6);
    it.weekday_end = pick(it.weekday_start, 6);
    it.hour_start = pick(0, 23);
    it.hour_end = pick(it.hour_start + 1, 24);
    return it;
}

/// Mixed kinds, up to three tiers per family, overlapping windows, and both
/// demand assessments. Tier blocks in a family share one window.
inline gridalign::TariffSchedule random_tariff(std::mt19937_64& rng, std::string id) {
    using namespace gridalign;
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TariffSchedule s;
    s.tariff_id = std::move(id);
    int families = pick(1, 6);
    for (int f = 0; f < families; ++f) {
        ChargeItem base;
        int k = pick(0, 9);
        base.kind = k < 5 ? ChargeKind::Energy : (k < 9 ? ChargeKind::Demand : ChargeKind::Customer);
        base.charge_family = std::string(base.kind == ChargeKind::Energy ? "E" : "D") + std::to_string(f);
        base = random_window(rng, base);
        base.assessed = (base.kind == ChargeKind::Demand && pick(0, 2) == 0) ? Assessment::Daily : Assessment::Monthly;
        if (base.kind == ChargeKind::Customer) {
            base.charge_family = "C" + std::to_string(f);
            base.rate = std::round(unit(rng) * 50000.0) / 100.0;
            s.items.push_back(base);
            continue;
        }
        int tiers = pick(1, 3);
        double floor = 0.0;
        for (int t = 0; t < tiers; ++t) {
            ChargeItem it = base;
            it.tier_floor = floor;
            it.rate = base.kind == ChargeKind::Energy ? 0.02 + 0.25 * unit(rng) : 2.0 + 20.0 * unit(rng);
            s.items.push_back(it);
            floor += base.kind == ChargeKind::Energy ? 1000.0 + 400000.0 * unit(rng) : 50.0 + 1500.0 * unit(rng);
        }
    }
    return s;
}

struct RandomLoad {
    int year;
    int first_month;
    int months;
    gridalign::LoadProfile profile;
};

/// Whole months of hourly kW with daily shape, noise, and frequent exact ties.
inline RandomLoad random_load(std::mt19937_64& rng, int year) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RandomLoad r{year, pick(1, 12), 0, {}};
    r.months = pick(1, 13 - r.first_month);
    r.profile = gridalign::LoadProfile::flat(year, r.first_month, r.months, 0.0);
    double base = 200.0 + 1500.0 * unit(rng);
    bool quantized = pick(0, 1) == 0;
    for (std::size_t i = 0; i < r.profile.kw.size(); ++i) {
        double hour = static_cast<double>(i % 24);
        double v = base * (0.7 + 0.3 * std::sin(hour / 24.0 * 6.283185307179586)) * (0.8 + 0.4 * unit(rng));
        if (unit(rng) < 0.002) v *= 2.5;
        if (quantized) v = std::round(v / 50.0) * 50.0;
        r.profile.kw[i] = std::max(0.0, v);
    }
    return r;
}

}  // namespace gen
