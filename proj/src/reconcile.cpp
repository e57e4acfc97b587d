#include "gridalign/reconcile.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "gridalign/billing.hpp"
#include "gridalign/csv.hpp"

namespace gridalign {

std::string_view to_string(Unit u) {
    switch (u) {
        case Unit::UsdPerKwh: return "usd_per_kwh";
        case Unit::UsdPerMwh: return "usd_per_mwh";
        case Unit::KgCo2ePerMwh: return "kg_co2e_per_mwh";
    }
    return "?";
}

Unit parse_unit(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "usd_per_kwh") return Unit::UsdPerKwh;
    if (t == "usd_per_mwh") return Unit::UsdPerMwh;
    if (t == "kg_co2e_per_mwh") return Unit::KgCo2ePerMwh;
    throw std::invalid_argument(fmt::format("unknown unit '{}'", text));
}

MonthHourMatrix::MonthHourMatrix() {
    for (auto& row : cells) {
        row.fill(kMissing);
    }
    for (auto& row : counts) {
        row.fill(0);
    }
}

FlattenResult flatten_tariff(TariffSchedule const& s, int year, FlattenOptions const& options) {
    if (!(options.reference_kw > 0.0)) {
        throw std::invalid_argument("reference load must be positive");
    }
    LoadProfile load = LoadProfile::flat_year(year, options.reference_kw);
    BillBreakdown bill = compute_bill(s, load);

    FlattenResult result;
    result.series = HourlySeries{s.tariff_id, Unit::UsdPerKwh, load.start, std::vector<double>(load.kw.size(), 0.0)};
    result.warnings = std::move(bill.warnings);

    // Calendar per hour, so window tests avoid date arithmetic.
    std::vector<std::array<int, 3>> slots(load.kw.size());  // month, weekday, hour
    int weekday = weekday_index(load.start);
    for (std::size_t t = 0; t < slots.size(); ++t) {
        DateHour h = load.start;
        h = add_hours(h, static_cast<std::int64_t>(t));
        if (t != 0 && h.hour == 0) {
            weekday = (weekday + 1) % 7;
        }
        slots[t] = {h.month, weekday, h.hour};
    }

    double const hourly_kwh = options.reference_kw;  // one-hour steps
    for (auto const& charge : bill.per_item) {
        if (charge.kind == ChargeKind::Customer) continue;
        if (options.only_kind && charge.kind != *options.only_kind) continue;
        result.usage_bill += charge.amount;
        if (charge.active_hours == 0 || charge.amount == 0.0) continue;

        auto const& item = s.items[charge.item_index];
        double per_hour = charge.amount / static_cast<double>(charge.active_hours) / hourly_kwh;
        for (std::size_t t = charge.period_begin; t < charge.period_end; ++t) {
            auto const& [month, wd, hour] = slots[t];
            if (item.is_active(month, wd, hour)) {
                result.series.values[t] += per_hour;
            }
        }
    }
    return result;
}

HourlySeries resample_to_hourly(SubHourlySeries const& series) {
    HourlySeries out;
    out.label = series.label;
    out.unit = series.unit;
    auto const& samples = series.samples;
    if (samples.empty()) {
        return out;
    }

    EpochMinutes step = 60;
    if (samples.size() >= 2) {
        step = samples[1].minutes - samples[0].minutes;
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (samples[i].minutes - samples[i - 1].minutes != step) {
                throw ReconcileError(fmt::format("{}: non-uniform sampling step at sample {}", series.label, i));
            }
        }
    }
    if (step <= 0 || step > 60 || 60 % step != 0) {
        throw ReconcileError(fmt::format("{}: step of {} minutes does not divide an hour", series.label, step));
    }

    auto hour_of = [](EpochMinutes m) {
        return m >= 0 ? m / 60 : -((-m + 59) / 60);
    };
    std::int64_t first_hour = hour_of(samples.front().minutes);
    std::int64_t last_hour = hour_of(samples.back().minutes);
    auto per_hour = static_cast<std::size_t>(60 / step);
    std::size_t n_hours = static_cast<std::size_t>(last_hour - first_hour + 1);

    std::vector<double> sums(n_hours, 0.0);
    std::vector<std::size_t> counts(n_hours, 0);
    std::vector<bool> poisoned(n_hours, false);
    for (auto const& s : samples) {
        auto h = static_cast<std::size_t>(hour_of(s.minutes) - first_hour);
        if (is_missing(s.value)) {
            poisoned[h] = true;
        } else {
            sums[h] += s.value;
            ++counts[h];
        }
    }

    out.start = from_epoch_hours(first_hour);
    out.values.resize(n_hours);
    for (std::size_t h = 0; h < n_hours; ++h) {
        out.values[h] = (poisoned[h] || counts[h] != per_hour) ? kMissing : sums[h] / static_cast<double>(per_hour);
    }
    return out;
}

MonthHourMatrix month_hour_average(HourlySeries const& series) {
    MonthHourMatrix m;
    m.label = series.label;
    m.unit = series.unit;
    std::array<std::array<double, 24>, 12> sums{};
    std::int64_t base = to_epoch_hours(series.start);
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        double v = series.values[i];
        if (is_missing(v)) continue;
        DateHour t = from_epoch_hours(base + static_cast<std::int64_t>(i));
        sums[t.month - 1][t.hour] += v;
        ++m.counts[t.month - 1][t.hour];
    }
    for (int mo = 0; mo < 12; ++mo) {
        for (int h = 0; h < 24; ++h) {
            if (m.counts[mo][h] > 0) {
                m.cells[mo][h] = sums[mo][h] / m.counts[mo][h];
            }
        }
    }
    return m;
}

std::pair<std::vector<double>, std::vector<double>> align(MonthHourMatrix const& a, MonthHourMatrix const& b,
                                                          int month) {
    if (month < 1 || month > 12) {
        throw std::invalid_argument(fmt::format("month {} out of range", month));
    }
    std::pair<std::vector<double>, std::vector<double>> out;
    for (int h = 0; h < 24; ++h) {
        double x = a.cell(month, h);
        double y = b.cell(month, h);
        if (!is_missing(x) && !is_missing(y)) {
            out.first.push_back(x);
            out.second.push_back(y);
        }
    }
    if (out.first.size() < 2) {
        throw AlignmentError(fmt::format("'{}' and '{}' share {} hour(s) in month {}; need at least 2", a.label,
                                         b.label, out.first.size(), month));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string serialize_hourly(HourlySeries const& s) {
    std::string out = "timestamp,value\n";
    std::int64_t base = to_epoch_hours(s.start);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        out += format_timestamp(from_epoch_hours(base + static_cast<std::int64_t>(i)));
        out.push_back(',');
        out += format_number(s.values[i]);
        out.push_back('\n');
    }
    return out;
}

SubHourlySeries parse_timed(std::string_view text, std::string label, Unit unit) {
    CsvTable table = parse_csv(text);
    auto ts = table.column("timestamp");
    auto val = table.column("value");
    if (!ts || !val) {
        throw ParseError(1, ts ? "value" : "timestamp", "required column missing from header");
    }
    SubHourlySeries out{std::move(label), unit, {}};
    out.samples.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        if (std::max(*ts, *val) >= row.size()) {
            throw ParseError(line, "", "row has too few fields");
        }
        TimedSample s;
        try {
            s.minutes = parse_timestamp_minutes(trim(row[*ts]));
        } catch (std::invalid_argument const& e) {
            throw ParseError(line, "timestamp", e.what());
        }
        auto v = trim(row[*val]);
        if (!v.empty()) {
            try {
                s.value = parse_number(v);
            } catch (std::invalid_argument const& e) {
                throw ParseError(line, "value", e.what());
            }
        }
        if (!out.samples.empty() && s.minutes <= out.samples.back().minutes) {
            throw ParseError(line, "timestamp", "timestamps must be strictly increasing");
        }
        out.samples.push_back(s);
    }
    return out;
}

HourlySeries parse_hourly(std::string_view text, std::string label, Unit unit) {
    SubHourlySeries timed = parse_timed(text, label, unit);
    HourlySeries out{std::move(label), unit, {}, {}};
    if (timed.samples.empty()) {
        return out;
    }
    for (auto const& s : timed.samples) {
        if (s.minutes % 60 != 0) {
            throw ReconcileError(fmt::format("{}: timestamp is not hour-aligned", out.label));
        }
    }
    std::int64_t first = timed.samples.front().minutes / 60;
    std::int64_t last = timed.samples.back().minutes / 60;
    out.start = from_epoch_hours(first);
    out.values.assign(static_cast<std::size_t>(last - first + 1), kMissing);  // gaps stay missing
    for (auto const& s : timed.samples) {
        out.values[static_cast<std::size_t>(s.minutes / 60 - first)] = s.value;
    }
    return out;
}

HourlySeries parse_price_series(std::string_view text, std::string label, Unit unit) {
    SubHourlySeries timed = parse_timed(text, label, unit);
    if (timed.samples.size() >= 2 && timed.samples[1].minutes - timed.samples[0].minutes < 60) {
        return resample_to_hourly(timed);
    }
    return parse_hourly(text, std::move(label), unit);
}

std::string serialize_matrix(MonthHourMatrix const& m) {
    std::string out;
    for (int h = 0; h < 24; ++h) {
        out += fmt::format("{}h{:02d}", h == 0 ? "" : ",", h);
    }
    out.push_back('\n');
    for (auto const& row : m.cells) {
        for (int h = 0; h < 24; ++h) {
            if (h != 0) out.push_back(',');
            out += format_number(row[h]);
        }
        out.push_back('\n');
    }
    return out;
}

MonthHourMatrix parse_matrix(std::string_view text, std::string label, Unit unit) {
    CsvTable table = parse_csv(text);
    if (table.header.size() != 24 || table.rows.size() != 12) {
        throw ParseError(1, "", fmt::format("month-hour matrix must be 12 rows x 24 columns, got {} x {}",
                                            table.rows.size(), table.header.size()));
    }
    MonthHourMatrix m;
    m.label = std::move(label);
    m.unit = unit;
    for (std::size_t r = 0; r < 12; ++r) {
        auto const& row = table.rows[r];
        if (row.size() != 24) {
            throw ParseError(table.line_numbers[r], "", "expected 24 values");
        }
        for (std::size_t h = 0; h < 24; ++h) {
            auto v = trim(row[h]);
            if (v.empty()) continue;
            try {
                m.cells[r][h] = parse_number(v);
                m.counts[r][h] = 1;  // counts are not persisted
            } catch (std::invalid_argument const& e) {
                throw ParseError(table.line_numbers[r], table.header[h], e.what());
            }
        }
    }
    return m;
}

std::string matrix_filename(MonthHourMatrix const& m) { return fmt::format("{}__{}.csv", m.label, to_string(m.unit)); }

std::optional<std::pair<std::string, Unit>> parse_matrix_filename(std::string_view filename) {
    if (!filename.ends_with(".csv")) return std::nullopt;
    filename.remove_suffix(4);
    auto sep = filename.rfind("__");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    try {
        return std::pair{std::string(filename.substr(0, sep)), parse_unit(filename.substr(sep + 2))};
    } catch (std::invalid_argument const&) {
        return std::nullopt;
    }
}

}  // namespace gridalign
