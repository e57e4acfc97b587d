#include "gridalign/billing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gridalign/csv.hpp"

namespace gridalign {

namespace {

struct HourSlot {
    int month;
    int day;
    int hour;
    int weekday;
};

bool active_at(ChargeItem const& item, HourSlot const& h) { return item.is_active(h.month, h.weekday, h.hour); }

/// [begin, end) load indices of each calendar month or day.
struct Span {
    std::size_t begin;
    std::size_t end;
    DateHour first;
};

std::vector<HourSlot> hour_slots(LoadProfile const& load) {
    std::vector<HourSlot> slots;
    slots.reserve(load.kw.size());
    std::int64_t base = to_epoch_hours(load.start);
    int weekday = weekday_index(load.start);
    for (std::size_t i = 0; i < load.kw.size(); ++i) {
        DateHour t = from_epoch_hours(base + static_cast<std::int64_t>(i));
        if (i != 0 && t.hour == 0) {
            weekday = (weekday + 1) % 7;
        }
        slots.push_back(HourSlot{t.month, t.day, t.hour, weekday});
    }
    return slots;
}

std::vector<Span> month_spans(LoadProfile const& load) {
    std::vector<Span> spans;
    std::size_t i = 0;
    while (i < load.kw.size()) {
        DateHour first = add_hours(load.start, static_cast<std::int64_t>(i));
        std::size_t n = static_cast<std::size_t>(days_in_month(first.year, first.month)) * 24;
        spans.push_back(Span{i, i + n, first});
        i += n;
    }
    return spans;
}

double block_amount(double rate, double quantity, double floor, double ceiling) {
    double within = std::clamp(quantity - floor, 0.0, ceiling - floor);
    return rate * within;
}

std::string month_label(DateHour const& t) { return fmt::format("{:04d}-{:02d}", t.year, t.month); }

}  // namespace

LoadProfile LoadProfile::flat(int year, int first_month, int months, double kw) {
    LoadProfile load{DateHour{year, first_month, 1, 0}, {}};
    std::size_t hours = 0;
    DateHour t = load.start;
    for (int m = 0; m < months; ++m) {
        std::size_t n = static_cast<std::size_t>(days_in_month(t.year, t.month)) * 24;
        hours += n;
        t = add_hours(t, static_cast<std::int64_t>(n));
    }
    load.kw.assign(hours, kw);
    return load;
}

double BillBreakdown::usage_total() const {
    double sum = 0.0;
    for (auto const& c : per_item) {
        if (c.kind != ChargeKind::Customer) {
            sum += c.amount;
        }
    }
    return sum;
}

void check_load(LoadProfile const& load) {
    if (load.kw.empty()) {
        throw BillingError("load profile is empty");
    }
    if (!is_valid(load.start) || load.start.day != 1 || load.start.hour != 0) {
        throw BillingError(fmt::format("load must start at the first hour of a month, got {}",
                                       format_timestamp(load.start)));
    }
    DateHour end = add_hours(load.start, static_cast<std::int64_t>(load.kw.size()));
    if (end.day != 1 || end.hour != 0) {
        throw BillingError(fmt::format("load ends mid-month at {}; only whole calendar months are billed",
                                       format_timestamp(end)));
    }
    for (std::size_t i = 0; i < load.kw.size(); ++i) {
        if (!std::isfinite(load.kw[i]) || load.kw[i] < 0.0) {
            throw BillingError(fmt::format("load value at index {} is negative or non-finite", i));
        }
    }
}

BillBreakdown compute_bill(TariffSchedule const& s, LoadProfile const& load) {
    if (auto v = validate_schedule(s); !v.empty()) {
        throw ValidationError(std::move(v));
    }
    check_load(load);

    auto slots = hour_slots(load);
    auto months = month_spans(load);
    std::vector<double> ceilings(s.items.size());
    for (std::size_t i = 0; i < s.items.size(); ++i) {
        ceilings[i] = tier_ceiling(s, i);
    }

    BillBreakdown bill;
    bill.tariff_id = s.tariff_id;

    for (auto const& month : months) {
        std::string label = month_label(month.first);
        for (std::size_t i = 0; i < s.items.size(); ++i) {
            auto const& item = s.items[i];
            ItemCharge charge{i, item.charge_family, item.kind, label, 0.0, 0.0, month.begin, month.end, 0};

            switch (item.kind) {
                case ChargeKind::Customer: {
                    charge.amount = item.rate;
                    charge.active_hours = month.end - month.begin;
                    bill.per_item.push_back(std::move(charge));
                    break;
                }
                case ChargeKind::Energy: {
                    if (!item.in_month(month.first.month)) break;
                    double kwh = 0.0;
                    for (std::size_t t = month.begin; t < month.end; ++t) {
                        if (active_at(item, slots[t])) {
                            kwh += load.kw[t];
                            ++charge.active_hours;
                        }
                    }
                    if (charge.active_hours == 0) break;
                    charge.quantity = kwh;
                    charge.amount = block_amount(item.rate, kwh, item.tier_floor, ceilings[i]);
                    bill.per_item.push_back(std::move(charge));
                    break;
                }
                case ChargeKind::Demand: {
                    if (!item.in_month(month.first.month)) break;
                    bool any_active = false;
                    // One assessment window per month, or per calendar day.
                    std::size_t step = item.assessed == Assessment::Monthly ? month.end - month.begin : 24;
                    for (std::size_t begin = month.begin; begin < month.end; begin += step) {
                        std::size_t end = begin + step;
                        std::size_t active = 0;
                        double peak = 0.0;
                        std::size_t peak_index = begin;
                        bool tied = false;
                        for (std::size_t t = begin; t < end; ++t) {
                            if (!active_at(item, slots[t])) continue;
                            if (active == 0 || load.kw[t] > peak) {
                                peak = load.kw[t];
                                peak_index = t;
                                tied = false;
                            } else if (load.kw[t] == peak) {
                                tied = true;
                            }
                            ++active;
                        }
                        if (active == 0) continue;
                        any_active = true;
                        ItemCharge c = charge;
                        if (item.assessed == Assessment::Daily) {
                            c.period = format_date(add_hours(load.start, static_cast<std::int64_t>(begin)));
                        }
                        c.period_begin = begin;
                        c.period_end = end;
                        c.active_hours = active;
                        c.quantity = peak;
                        c.amount = block_amount(item.rate, peak, item.tier_floor, ceilings[i]);
                        bill.peaks.push_back(PeakRecord{i, item.charge_family, c.period, peak, peak_index, tied});
                        bill.per_item.push_back(std::move(c));
                    }
                    if (!any_active) {
                        bill.warnings.push_back(fmt::format(
                            "{}: demand item {} ('{}') has no active hours in {}; contributes 0",
                            s.tariff_id, i, item.charge_family, label));
                        charge.amount = 0.0;
                        bill.per_item.push_back(std::move(charge));
                    }
                    break;
                }
            }
        }
    }

    for (auto const& c : bill.per_item) {
        bill.total += c.amount;
    }
    return bill;
}

double ChargeFunction::evaluate(std::span<double const> energy_kwh) const {
    if (energy_kwh.size() != coefficients.size()) {
        throw std::invalid_argument(fmt::format("charge function covers {} hours, got {}", coefficients.size(),
                                                energy_kwh.size()));
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < coefficients.size(); ++t) {
        sum += coefficients[t] * energy_kwh[t];
    }
    return sum + constant;
}

ChargeFunction build_charge_function(TariffSchedule const& s, LoadProfile const& load) {
    BillBreakdown bill = compute_bill(s, load);
    auto slots = hour_slots(load);

    ChargeFunction fn;
    fn.coefficients.assign(load.kw.size(), 0.0);

    for (auto const& c : bill.per_item) {
        auto const& item = s.items[c.item_index];
        switch (item.kind) {
            case ChargeKind::Customer:
                fn.constant += c.amount;
                break;
            case ChargeKind::Demand:
                fn.constant += c.amount;
                break;
            case ChargeKind::Energy: {
                double ceiling = tier_ceiling(s, c.item_index);
                bool in_block = c.quantity >= item.tier_floor && c.quantity < ceiling;
                double marginal = in_block ? item.rate : 0.0;
                for (std::size_t t = c.period_begin; t < c.period_end; ++t) {
                    if (active_at(item, slots[t])) {
                        fn.coefficients[t] += marginal;
                    }
                }
                // Inframarginal blocks below the active one are a fixed amount
                // at this load; the linear part already covers marginal * kWh.
                fn.constant += c.amount - marginal * c.quantity;
                break;
            }
        }
    }

    for (auto const& p : bill.peaks) {
        auto const& item = s.items[p.item_index];
        double ceiling = tier_ceiling(s, p.item_index);
        bool in_block = p.peak_kw >= item.tier_floor && p.peak_kw < ceiling;
        fn.peaks.push_back(PeakAttribution{p.item_index, p.period, p.peak_index, in_block ? item.rate : 0.0, p.tied});
        fn.has_ties = fn.has_ties || p.tied;
    }
    return fn;
}

std::string serialize_bill(BillBreakdown const& bill) {
    std::string out(kBillHeader);
    out.push_back('\n');
    for (auto const& c : bill.per_item) {
        out += csv_join({bill.tariff_id, c.period, c.charge_family, std::string(to_string(c.kind)),
                         format_number(c.amount)});
        out.push_back('\n');
    }
    return out;
}

}  // namespace gridalign
