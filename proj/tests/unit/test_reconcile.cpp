#include <doctest.h>

#include <random>

#include <fmt/format.h>

#include "billing_oracle.hpp"
#include "generators.hpp"
#include "gridalign/analysis.hpp"
#include "gridalign/billing.hpp"
#include "gridalign/reconcile.hpp"

using namespace gridalign;

namespace {

TariffSchedule rows(std::string const& body) { return parse_tariff(std::string(kTariffHeader) + "\n" + body, "T"); }

HourlySeries year_series(int year, auto&& fn) {
    HourlySeries s{"x", Unit::UsdPerMwh, DateHour{year, 1, 1, 0}, {}};
    for (int i = 0; i < hours_in_year(year); ++i) s.values.push_back(fn(s.time_at(static_cast<std::size_t>(i))));
    return s;
}

}  // namespace

TEST_SUITE("reconcile") {
    TEST_CASE("flat energy tariff flattens to a constant") {
        auto f = flatten_tariff(rows("energy,E1,0.10,0,1,12,0,6,0,24,monthly\n"), 2023);
        REQUIRE(f.series.values.size() == 8760);
        for (double v : f.series.values) CHECK(v == doctest::Approx(0.10).epsilon(1e-12));
    }

    TEST_CASE("monthly demand is spread over the active hours") {
        auto s = rows("demand,D1,10,0,1,12,0,4,16,21,monthly\n");
        auto f = flatten_tariff(s, 2023);
        // September 2023 has 21 weekdays, so 105 active hours.
        int active = 0;
        double expected = 10000.0 / 105.0 / 1000.0;
        for (std::size_t i = 0; i < f.series.values.size(); ++i) {
            auto t = f.series.time_at(i);
            if (t.month != 9) continue;
            bool on = weekday_index(t) <= 4 && t.hour >= 16 && t.hour < 21;
            if (on) {
                ++active;
                CHECK(f.series.values[i] == doctest::Approx(expected).epsilon(1e-12));
            } else {
                CHECK(f.series.values[i] == 0.0);
            }
        }
        CHECK(active == 105);
        CHECK(expected == doctest::Approx(0.095238).epsilon(1e-5));
    }

    TEST_CASE("daily demand is spread within each day") {
        auto f = flatten_tariff(rows("demand,D1,3,0,1,12,0,6,14,19,daily\n"), 2023);
        for (std::size_t i = 0; i < 48; ++i) {
            int h = static_cast<int>(i % 24);
            CHECK(f.series.values[i] == doctest::Approx(h >= 14 && h < 19 ? 3000.0 / 5 / 1000 : 0.0));
        }
    }

    TEST_CASE("customer charges are excluded and kinds can be isolated") {
        auto s = rows("energy,E1,0.10,0,1,12,0,6,0,24,monthly\ndemand,D1,10,0,1,12,0,6,0,24,monthly\n"
                      "customer,C1,500,0,1,12,0,6,0,24,monthly\n");
        auto all = flatten_tariff(s, 2023);
        auto energy = flatten_tariff(s, 2023, FlattenOptions{1000.0, ChargeKind::Energy});
        auto demand = flatten_tariff(s, 2023, FlattenOptions{1000.0, ChargeKind::Demand});
        for (std::size_t i = 0; i < all.series.values.size(); i += 97) {
            CHECK(all.series.values[i] == doctest::Approx(energy.series.values[i] + demand.series.values[i]));
        }
        CHECK(all.usage_bill == doctest::Approx(compute_bill(s, LoadProfile::flat_year(2023, 1000.0)).usage_total()));
    }

    TEST_CASE("conservation and non-negativity on random schedules") {
        std::mt19937_64 rng(41);
        std::vector<double> flat(8760, 1000.0);
        for (int i = 0; i < 100; ++i) {
            auto s = gen::random_tariff(rng, "R");
            auto f = flatten_tariff(s, 2023);
            double sum = 0.0;
            for (double v : f.series.values) {
                CHECK(v >= 0.0);
                sum += v * 1000.0;
            }
            auto bill = compute_bill(s, LoadProfile::flat_year(2023, 1000.0));
            double usage = bill.total;
            for (auto const& c : bill.per_item)
                if (c.kind == ChargeKind::Customer) usage -= c.amount;
            CHECK(sum == doctest::Approx(usage).epsilon(1e-9));
        }
    }

    TEST_CASE("flat tariffs have no within-month variance") {
        auto s = rows("energy,E1,0.09,0,1,5,0,6,0,24,monthly\nenergy,E2,0.13,0,6,12,0,6,0,24,monthly\n");
        auto m = month_hour_average(flatten_tariff(s, 2023).series);
        for (int month = 1; month <= 12; ++month) {
            auto row = m.month_row(month);
            CHECK_FALSE(pearson(std::vector<double>(row.begin(), row.end()), std::vector<double>(24, 1.0)).has_value());
            for (double v : row) CHECK(v == doctest::Approx(row[0]));
        }
    }

    TEST_CASE("resampling 15 minute values") {
        SubHourlySeries s{"n", Unit::UsdPerMwh, {}};
        auto t0 = parse_timestamp_minutes("2023-01-01 00:00");
        for (int i = 0; i < 4; ++i) s.samples.push_back({t0 + 15 * i, static_cast<double>(i + 1)});
        auto h = resample_to_hourly(s);
        REQUIRE(h.values.size() == 1);
        CHECK(h.values[0] == 2.5);
        CHECK(h.start == DateHour{2023, 1, 1, 0});
    }

    TEST_CASE("resampling a random 96-step day matches a direct mean") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-50.0, 150.0);
        SubHourlySeries s{"n", Unit::UsdPerMwh, {}};
        auto t0 = parse_timestamp_minutes("2023-03-10");
        for (int i = 0; i < 96; ++i) s.samples.push_back({t0 + 15 * i, u(rng)});
        auto h = resample_to_hourly(s);
        REQUIRE(h.values.size() == 24);
        for (int k = 0; k < 24; ++k) {
            double direct = 0.0;
            for (int j = 0; j < 4; ++j) direct += s.samples[static_cast<std::size_t>(4 * k + j)].value;
            CHECK(std::abs(h.values[static_cast<std::size_t>(k)] - direct / 4.0) <= 1e-12);
        }
    }

    TEST_CASE("resampling constants and gaps") {
        SubHourlySeries s{"n", Unit::UsdPerMwh, {}};
        auto t0 = parse_timestamp_minutes("2023-01-01");
        for (int i = 0; i < 24; ++i) s.samples.push_back({t0 + 5 * i, 7.0});
        auto h = resample_to_hourly(s);
        CHECK(h.values == std::vector<double>{7.0, 7.0});

        s.samples[3].value = kMissing;
        h = resample_to_hourly(s);
        CHECK(is_missing(h.values[0]));
        CHECK(h.values[1] == 7.0);

        auto partial = s;
        partial.samples.resize(20);  // second hour has 8 of 12 steps
        h = resample_to_hourly(partial);
        CHECK(is_missing(h.values[1]));

        auto uneven = s;
        uneven.samples[5].minutes += 1;
        CHECK_THROWS_AS(resample_to_hourly(uneven), ReconcileError);

        SubHourlySeries odd{"n", Unit::UsdPerMwh, {{t0, 1.0}, {t0 + 7, 1.0}, {t0 + 14, 1.0}}};
        CHECK_THROWS_AS(resample_to_hourly(odd), ReconcileError);
    }

    TEST_CASE("month-hour averaging") {
        auto c = month_hour_average(year_series(2023, [](DateHour) { return 4.5; }));
        for (int m = 1; m <= 12; ++m)
            for (int h = 0; h < 24; ++h) CHECK(c.cell(m, h) == 4.5);

        auto closed = month_hour_average(year_series(2024, [](DateHour t) { return t.month * 100.0 + t.hour; }));
        for (int m = 1; m <= 12; ++m)
            for (int h = 0; h < 24; ++h) {
                CHECK(closed.cell(m, h) == m * 100.0 + h);
                CHECK(closed.count(m, h) == days_in_month(2024, m));
            }

        auto jan = year_series(2023, [](DateHour t) { return t.month == 1 ? 1.0 : kMissing; });
        auto j = month_hour_average(jan);
        CHECK(j.cell(1, 5) == 1.0);
        for (int m = 2; m <= 12; ++m) {
            CHECK(is_missing(j.cell(m, 5)));
            CHECK(j.count(m, 5) == 0);
        }
    }

    TEST_CASE("averaging a series rebuilt from the matrix is idempotent") {
        std::mt19937_64 rng(43);
        std::normal_distribution<double> n(40.0, 12.0);
        auto m = month_hour_average(year_series(2023, [&](DateHour) { return n(rng); }));
        auto rebuilt = year_series(2023, [&](DateHour t) { return m.cell(t.month, t.hour); });
        auto again = month_hour_average(rebuilt);
        for (int mo = 1; mo <= 12; ++mo)
            for (int h = 0; h < 24; ++h) CHECK(again.cell(mo, h) == doctest::Approx(m.cell(mo, h)).epsilon(1e-12));
    }

    TEST_CASE("alignment") {
        auto full = month_hour_average(year_series(2023, [](DateHour t) { return t.hour * 1.0; }));
        auto [a, b] = align(full, full, 3);
        CHECK(a.size() == 24);
        CHECK(b.size() == 24);

        auto half = full;
        for (int h = 0; h < 12; ++h) half.cells[2][h] = kMissing;
        auto [c, d] = align(half, full, 3);
        CHECK(c.size() == 12);
        CHECK(c.front() == 12.0);
        CHECK(d.front() == 12.0);

        auto other = full;
        for (int h = 12; h < 24; ++h) other.cells[2][h] = kMissing;
        CHECK_THROWS_AS(align(half, other, 3), AlignmentError);
        CHECK_THROWS(align(full, full, 13));
    }

    TEST_CASE("csv surfaces round-trip") {
        auto s = year_series(2023, [](DateHour t) { return t.hour == 3 ? kMissing : t.day + 0.25; });
        auto back = parse_hourly(serialize_hourly(s), "x", Unit::UsdPerMwh);
        REQUIRE(back.values.size() == s.values.size());
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            CHECK((is_missing(s.values[i]) ? is_missing(back.values[i]) : back.values[i] == s.values[i]));
        }

        auto m = month_hour_average(s);
        m.label = "CAISO";
        m.unit = Unit::KgCo2ePerMwh;
        CHECK(matrix_filename(m) == "CAISO__kg_co2e_per_mwh.csv");
        auto parsed_name = parse_matrix_filename("CAISO__NP15__usd_per_mwh.csv");
        REQUIRE(parsed_name);
        CHECK(parsed_name->first == "CAISO__NP15");
        CHECK(parsed_name->second == Unit::UsdPerMwh);
        auto text = serialize_matrix(m);
        auto pm = parse_matrix(text, "CAISO", Unit::KgCo2ePerMwh);
        CHECK(serialize_matrix(pm) == text);
    }

    TEST_CASE("sub-hourly price files are resampled on read") {
        std::string text = "timestamp,value\n";
        for (int i = 0; i < 8; ++i) text += fmt::format("2023-05-01 0{}:{:02d},{}\n", i / 4, 15 * (i % 4), i);
        auto h = parse_price_series(text, "n", Unit::UsdPerMwh);
        CHECK(h.values == std::vector<double>{1.5, 5.5});
        auto hourly = parse_price_series("timestamp,value\n2023-05-01 00:00,3\n2023-05-01 02:00,4\n", "n",
                                         Unit::UsdPerMwh);
        REQUIRE(hourly.values.size() == 3);
        CHECK(is_missing(hourly.values[1]));
    }
}
