#include "gridalign/emissions.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "gridalign/csv.hpp"

namespace gridalign {

namespace {

void check_lengths(GenEmisSeries const& s) {
    if (s.generation_mwh.size() != s.emissions_kg.size()) {
        throw ReconcileError(fmt::format("{}: generation has {} hours but emissions has {}", s.region,
                                         s.generation_mwh.size(), s.emissions_kg.size()));
    }
}

}  // namespace

MonthHourMatrix average_aef(GenEmisSeries const& series) {
    check_lengths(series);
    MonthHourMatrix m;
    m.label = series.region;
    m.unit = Unit::KgCo2ePerMwh;
    std::array<std::array<double, 24>, 12> sum_e{};
    std::array<std::array<double, 24>, 12> sum_g{};
    std::int64_t base = to_epoch_hours(series.start);
    for (std::size_t i = 0; i < series.generation_mwh.size(); ++i) {
        double g = series.generation_mwh[i];
        double e = series.emissions_kg[i];
        if (is_missing(g) || is_missing(e)) continue;
        DateHour t = from_epoch_hours(base + static_cast<std::int64_t>(i));
        sum_e[t.month - 1][t.hour] += e;
        sum_g[t.month - 1][t.hour] += g;
        ++m.counts[t.month - 1][t.hour];
    }
    for (int mo = 0; mo < 12; ++mo) {
        for (int h = 0; h < 24; ++h) {
            // Equal sample counts, so mean(E) / mean(G) == sum(E) / sum(G).
            if (m.counts[mo][h] > 0 && sum_g[mo][h] > 0.0) {
                m.cells[mo][h] = sum_e[mo][h] / sum_g[mo][h];
            } else {
                m.counts[mo][h] = 0;
            }
        }
    }
    return m;
}

MonthHourMatrix estimate_mef(GenEmisSeries const& series) {
    check_lengths(series);
    MonthHourMatrix m;
    m.label = series.region;
    m.unit = Unit::KgCo2ePerMwh;
    std::array<std::array<double, 24>, 12> sxy{};
    std::array<std::array<double, 24>, 12> sxx{};
    std::int64_t base = to_epoch_hours(series.start);
    DateHour prev_t = from_epoch_hours(base);
    for (std::size_t i = 1; i < series.generation_mwh.size(); ++i) {
        DateHour t = from_epoch_hours(base + static_cast<std::int64_t>(i));
        bool same_month = t.month == prev_t.month && t.year == prev_t.year;
        prev_t = t;
        if (!same_month) continue;
        double dg = series.generation_mwh[i] - series.generation_mwh[i - 1];
        double de = series.emissions_kg[i] - series.emissions_kg[i - 1];
        if (is_missing(dg) || is_missing(de)) continue;
        sxy[t.month - 1][t.hour] += dg * de;
        sxx[t.month - 1][t.hour] += dg * dg;
        ++m.counts[t.month - 1][t.hour];
    }
    for (int mo = 0; mo < 12; ++mo) {
        for (int h = 0; h < 24; ++h) {
            if (m.counts[mo][h] >= 2 && sxx[mo][h] > 0.0) {
                m.cells[mo][h] = sxy[mo][h] / sxx[mo][h];
            } else {
                m.counts[mo][h] = 0;
            }
        }
    }
    return m;
}

RatioSummary mef_aef_summary(MonthHourMatrix const& mef, MonthHourMatrix const& aef) {
    RatioSummary out;
    out.min = std::numeric_limits<double>::infinity();
    out.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int mo = 1; mo <= 12; ++mo) {
        for (int h = 0; h < 24; ++h) {
            double a = aef.cell(mo, h);
            double b = mef.cell(mo, h);
            if (is_missing(a) || is_missing(b) || a == 0.0) continue;
            double r = b / a;
            sum += r;
            out.min = std::min(out.min, r);
            out.max = std::max(out.max, r);
            ++out.cells;
        }
    }
    if (out.cells == 0) {
        throw ReconcileError(fmt::format("'{}' and '{}' have no common cells", mef.label, aef.label));
    }
    out.mean = sum / static_cast<double>(out.cells);
    return out;
}

GenEmisSeries parse_gen_emis(std::string_view text, std::string region) {
    CsvTable table = parse_csv(text);
    auto ts = table.column("timestamp");
    auto gen = table.column("generation_mwh");
    auto emis = table.column("emissions_kg");
    for (auto [col, name] : {std::pair{ts, "timestamp"}, std::pair{gen, "generation_mwh"},
                             std::pair{emis, "emissions_kg"}}) {
        if (!col) throw ParseError(1, name, "required column missing from header");
    }

    GenEmisSeries out{std::move(region), {}, {}, {}};
    std::int64_t expected = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        if (std::max({*ts, *gen, *emis}) >= row.size()) {
            throw ParseError(line, "", "row has too few fields");
        }
        std::int64_t hour = 0;
        try {
            hour = to_epoch_hours(parse_timestamp_hour(trim(row[*ts])));
        } catch (std::invalid_argument const& e) {
            throw ParseError(line, "timestamp", e.what());
        }
        if (r == 0) {
            out.start = from_epoch_hours(hour);
            expected = hour;
        }
        if (hour < expected) {
            throw ParseError(line, "timestamp", "timestamps must be strictly increasing");
        }
        for (; expected < hour; ++expected) {  // gap
            out.generation_mwh.push_back(kMissing);
            out.emissions_kg.push_back(kMissing);
        }
        auto num = [&](std::size_t col, char const* name) {
            auto v = trim(row[col]);
            if (v.empty()) return kMissing;
            try {
                return parse_number(v);
            } catch (std::invalid_argument const& e) {
                throw ParseError(line, name, e.what());
            }
        };
        out.generation_mwh.push_back(num(*gen, "generation_mwh"));
        out.emissions_kg.push_back(num(*emis, "emissions_kg"));
        ++expected;
    }
    return out;
}

std::string serialize_gen_emis(GenEmisSeries const& s) {
    check_lengths(s);
    std::string out = "timestamp,generation_mwh,emissions_kg\n";
    std::int64_t base = to_epoch_hours(s.start);
    for (std::size_t i = 0; i < s.generation_mwh.size(); ++i) {
        out += fmt::format("{},{},{}\n", format_timestamp(from_epoch_hours(base + static_cast<std::int64_t>(i))),
                           format_number(s.generation_mwh[i]), format_number(s.emissions_kg[i]));
    }
    return out;
}

}  // namespace gridalign
