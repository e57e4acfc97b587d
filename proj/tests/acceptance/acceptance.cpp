// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//   acceptance               run every criterion
//   acceptance --criterion N run one; exit 77 when it is skipped

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "billing_oracle.hpp"
#include "generators.hpp"
#include "geo_oracle.hpp"
#include "idropp_oracle.hpp"
#include "stats_oracle.hpp"

#include "gridalign/analysis.hpp"
#include "gridalign/billing.hpp"
#include "gridalign/csv.hpp"
#include "gridalign/emissions.hpp"
#include "gridalign/geo.hpp"
#include "gridalign/idropp.hpp"
#include "gridalign/pipeline.hpp"
#include "gridalign/reconcile.hpp"

namespace fs = std::filesystem;
using namespace gridalign;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close_rel(double a, double b, double tol) {
    if (b == 0.0) return a == 0.0;
    return std::abs(a - b) <= tol * std::abs(b);
}

constexpr int kYear = 2023;

std::vector<TariffSchedule> random_tariffs(std::size_t n) {
    std::mt19937_64 rng(1);
    std::vector<TariffSchedule> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(gen::random_tariff(rng, fmt::format("R{:03}", i)));
    return out;
}

// 1 -------------------------------------------------------------------------
Outcome billing_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    auto tariffs = random_tariffs(200);
    std::mt19937_64 rng(2);
    std::vector<gen::RandomLoad> loads;
    for (int i = 0; i < 20; ++i) loads.push_back(gen::random_load(rng, kYear));

    std::size_t checked = 0, failed = 0;
    double worst = 0.0;
    for (auto const& s : tariffs) {
        for (auto const& l : loads) {
            double got = compute_bill(s, l.profile).total;
            double want = oracle::bill(s, l.year, l.first_month, l.months, l.profile.kw).total;
            ++checked;
            if (want != 0.0) worst = std::max(worst, std::abs(got - want) / std::abs(want));
            if (!close_rel(got, want, 1e-9)) ++failed;
        }
    }
    double secs = seconds_since(t0);
    return verdict(failed == 0 && secs < 30.0,
                   fmt::format("{} bills, {} mismatches, max rel err {:.2e}, {:.1f} s (limit 30 s)", checked, failed,
                               worst, secs));
}

// 2 -------------------------------------------------------------------------
Outcome flattening_conservation() {
    auto tariffs = random_tariffs(200);
    std::vector<double> flat(static_cast<std::size_t>(hours_in_year(kYear)), 1000.0);
    std::size_t failed = 0;
    double worst = 0.0;
    for (auto const& s : tariffs) {
        auto f = flatten_tariff(s, kYear);
        double sum = 0.0;
        for (double v : f.series.values) sum += v * 1000.0;
        auto want = oracle::bill(s, kYear, 1, 12, flat);
        double target = want.total - want.customer;
        if (target != 0.0) worst = std::max(worst, std::abs(sum - target) / std::abs(target));
        if (!close_rel(sum, target, 1e-9)) ++failed;
    }
    return verdict(failed == 0,
                   fmt::format("{} tariffs, {} violations, max rel err {:.2e}", tariffs.size(), failed, worst));
}

// 3 -------------------------------------------------------------------------
Outcome categorization_suite() {
    auto make = [](std::string id, std::string body) {
        return parse_tariff(std::string(kTariffHeader) + "\n" + body, std::move(id));
    };
    struct Case {
        TariffSchedule s;
        TariffCategory want;
    };
    std::vector<Case> cases = {
        {make("flat", "energy,E1,0.10,0,1,12,0,6,0,24,monthly\n"
                      "demand,D1,8,0,1,12,0,6,0,24,monthly\n"),
         TariffCategory::Flat},
        {make("seasonal_tou", "energy,E1,0.09,0,1,5,0,6,0,24,monthly\n"
                              "energy,E2,0.09,0,10,12,0,6,0,24,monthly\n"
                              "energy,E3,0.08,0,6,9,0,6,0,16,monthly\n"
                              "energy,E4,0.22,0,6,9,0,6,16,21,monthly\n"
                              "energy,E5,0.08,0,6,9,0,6,21,24,monthly\n"),
         TariffCategory::SeasonalTOU},
        {make("nonseasonal_tou", "energy,E1,0.07,0,1,12,0,6,0,12,monthly\n"
                                 "energy,E2,0.15,0,1,12,0,6,12,20,monthly\n"
                                 "energy,E3,0.07,0,1,12,0,6,20,24,monthly\n"),
         TariffCategory::NonseasonalTOU},
        {make("seasonal_nontou", "energy,E1,0.09,0,1,5,0,6,0,24,monthly\n"
                                 "energy,E2,0.13,0,6,9,0,6,0,24,monthly\n"
                                 "energy,E3,0.09,0,10,12,0,6,0,24,monthly\n"
                                 "demand,D1,12,0,6,9,0,6,0,24,monthly\n"),
         TariffCategory::SeasonalNonTOU},
    };
    std::size_t right = 0;
    std::string got;
    for (auto const& c : cases) {
        auto r = categorize(c.s).overall;
        got += fmt::format(" {}={}", c.s.tariff_id, to_string(r));
        if (r == c.want) ++right;
    }
    return verdict(right == cases.size(), fmt::format("{}/{} exact:{}", right, cases.size(), got));
}

// 4 -------------------------------------------------------------------------
Outcome pearson_property() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t formula_fail = 0, affine_fail = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(24), y(24);
        double mix = 2.0 * unit(rng) - 1.0;
        for (int i = 0; i < 24; ++i) {
            x[i] = unit(rng);
            y[i] = mix * x[i] + (1.0 - std::abs(mix)) * unit(rng);
        }
        auto r = pearson(x, y);
        auto want = oracle::pearson_sums(x, y);
        if (!r || !want || std::abs(*r - *want) > 1e-12) ++formula_fail;
        if (r && want) worst = std::max(worst, std::abs(*r - *want));

        double a = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 10.0 * unit(rng));
        double c = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 10.0 * unit(rng));
        double b = 200.0 * unit(rng) - 100.0, d = 200.0 * unit(rng) - 100.0;
        std::vector<double> xa(24), yc(24);
        for (int i = 0; i < 24; ++i) {
            xa[i] = a * x[i] + b;
            yc[i] = c * y[i] + d;
        }
        auto ra = pearson(xa, yc);
        double sign = (a > 0) == (c > 0) ? 1.0 : -1.0;
        if (!r || !ra || std::abs(*ra - sign * *r) > 1e-10) ++affine_fail;
    }
    std::vector<double> constant(24, 3.25), ramp(24);
    for (int i = 0; i < 24; ++i) ramp[i] = i;
    bool undefined = !pearson(constant, ramp).has_value() && !pearson(ramp, constant).has_value();
    return verdict(formula_fail == 0 && affine_fail == 0 && undefined,
                   fmt::format("1000 vectors: {} formula mismatches (max |dr| {:.1e}), {} affine failures, "
                               "constant vector undefined: {}",
                               formula_fail, worst, affine_fail, undefined ? "yes" : "no"));
}

// 5 -------------------------------------------------------------------------
GenEmisSeries alternating_month(std::mt19937_64& rng, double noise_sigma, bool integer_generation) {
    // June 2023 has 720 hours. Generation swings between a low and a high
    // level every hour so that every first difference is large.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    GenEmisSeries s;
    s.region = "synthetic";
    s.start = DateHour{kYear, 6, 1, 0};
    double mean = 10000.0;
    for (int t = 0; t < 720; ++t) {
        double sign = (t % 2 == 0) ? 1.0 : -1.0;
        double g = mean * (1.0 + 0.95 * sign * (0.8 + 0.2 * unit(rng)));
        if (integer_generation) g = std::round(g);
        double e = 0.5 * g;
        if (noise_sigma > 0.0) e *= 1.0 + noise_sigma * noise(rng);
        s.generation_mwh.push_back(g);
        s.emissions_kg.push_back(e);
    }
    return s;
}

Outcome mef_regression() {
    std::mt19937_64 rng(5);
    // Noiseless: exact recovery in every cell of every month of a year.
    GenEmisSeries year;
    year.region = "noiseless";
    year.start = DateHour{kYear, 1, 1, 0};
    std::uniform_int_distribution<int> g(1000, 60000);
    for (int t = 0; t < hours_in_year(kYear); ++t) {
        double v = g(rng);
        year.generation_mwh.push_back(v);
        year.emissions_kg.push_back(0.5 * v + 1234.0);
    }
    auto exact = estimate_mef(year);
    std::size_t exact_cells = 0;
    for (int m = 1; m <= 12; ++m)
        for (int h = 0; h < 24; ++h)
            if (exact.cell(m, h) == 0.5) ++exact_cells;

    int good_trials = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = alternating_month(rng, 0.05, false);
        auto mef = estimate_mef(s);
        bool all = true;
        for (int h = 0; h < 24; ++h) {
            double err = std::abs(mef.cell(6, h) - 0.5);
            if (is_missing(err)) err = INFINITY;
            worst = std::max(worst, err);
            if (!(err <= 0.02)) all = false;
        }
        if (all) ++good_trials;
    }
    return verdict(exact_cells == 288 && good_trials >= 95,
                   fmt::format("noiseless: {}/288 cells exactly 0.5; 5% noise: {}/100 trials with all 24 cells "
                               "within 0.02 (worst {:.4f})",
                               exact_cells, good_trials, worst));
}

// 6 -------------------------------------------------------------------------
Outcome geospatial() {
    auto regions = parse_regions_geojson(read_file(GRIDALIGN_CORPUS_DIR "/regions.geojson"));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lon(-126.0, -72.0), lat(24.0, 44.0);
    std::size_t agree = 0, boundary = 0, exterior = 0, exterior_other = 0, compared = 0;
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        LonLat p{lon(rng), lat(rng)};
        auto got = assign_region(p, regions);
        if (got.on_boundary) {
            ++boundary;
            continue;
        }
        ++compared;
        auto want = oracle::region_of(regions, p);
        seen.insert(want);
        if (got.region == want) ++agree;
        if (want == kOtherRegion) {
            ++exterior;
            if (got.region == kOtherRegion) ++exterior_other;
        }
    }
    return verdict(agree == compared && exterior == exterior_other && seen.size() == 4,
                   fmt::format("{}/{} agree with winding-number oracle ({} boundary-flagged excluded); "
                               "{}/{} exterior points -> Other; regions hit: {}",
                               agree, compared, boundary, exterior_other, exterior, seen.size()));
}

// 7 -------------------------------------------------------------------------
Outcome ibdr_arithmetic() {
    bool hours = equivalent_hours(40.0, 0.08) == 500.0 && equivalent_hours(200.0, 0.08) == 2500.0;
    IbdrProgram blank;
    auto bounds = duration_bounds(blank);
    bool defaults = bounds.min_hours == 1.0 && bounds.max_hours == 6.3;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t baseline_ok = 0, payment_ok = 0, infeasible_agree = 0;
    int const trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        oracle::BaselineSpec spec;
        spec.range_val = std::uniform_int_distribution<int>(3, 10)(rng);
        spec.weekends = unit(rng) < 0.5;
        spec.holidays = unit(rng) < 0.5;
        spec.prev_events = unit(rng) < 0.5;
        spec.function = static_cast<Aggregation>(std::uniform_int_distribution<int>(0, 2)(rng));
        int h0 = std::uniform_int_distribution<int>(0, 20)(rng);
        int h1 = std::uniform_int_distribution<int>(h0 + 1, 24)(rng);
        for (int h = h0; h < h1; ++h) spec.hours.push_back(h);

        IbdrProgram p;
        p.set(ProgramField::RangeVal, std::to_string(spec.range_val));
        p.set(ProgramField::Weekends, spec.weekends ? "yes" : "no");
        p.set(ProgramField::Holidays, spec.holidays ? "yes" : "no");
        p.set(ProgramField::PrevEvents, spec.prev_events ? "yes" : "no");
        p.set(ProgramField::Function, std::array{"mean", "max", "median"}[static_cast<int>(spec.function)]);
        p.set(ProgramField::BaseHours, fmt::format("{}-{}", h0, h1));

        // 30 days of July history in shuffled order, some holidays and events.
        std::vector<DayLoad> history;
        std::set<Date> holidays;
        for (int d = 1; d <= 30; ++d) {
            DayLoad day;
            day.date = Date{kYear, 7, d};
            day.event_day = unit(rng) < 0.15;
            if (unit(rng) < 0.1) holidays.insert(day.date);
            for (auto& v : day.kw) v = std::round(400.0 + 800.0 * unit(rng));
            history.push_back(day);
        }
        std::shuffle(history.begin(), history.end(), rng);
        Date event{kYear, 7, 31};
        if (trial % 10 == 9) event = Date{kYear, 7, 6};  // few days available

        auto want = oracle::baseline(spec, history, event, holidays);
        std::optional<Baseline> got;
        try {
            got = compute_baseline(p, history, event, holidays);
        } catch (BaselineInfeasible const&) {
        }
        if (!want || !got) {
            if (!want && !got) {
                ++infeasible_agree;
                ++baseline_ok;
                ++payment_ok;
            }
            continue;
        }
        if (got->kw == *want) ++baseline_ok;

        std::size_t duration = std::min<std::size_t>(want->size(), std::uniform_int_distribution<std::size_t>(1, 6)(rng));
        std::vector<double> base(want->begin(), want->begin() + static_cast<std::ptrdiff_t>(duration));
        std::vector<double> metered;
        for (double b : base) metered.push_back(std::max(0.0, b - 600.0 * unit(rng) + 150.0));
        double nomination = 50.0 + 400.0 * unit(rng);
        double rate = 0.5 + 20.0 * unit(rng);
        bool per_kw = trial % 2 == 0;
        auto pay = compute_payment(p, base, metered, nomination, rate, per_kw ? RateBasis::PerKw : RateBasis::PerKwh);
        auto ref = oracle::settle(base, metered, nomination, rate, per_kw);
        if (std::abs(pay.payment - ref.payment) <= 1e-9 * std::max(1.0, ref.payment) && pay.delivered_ratio &&
            std::abs(*pay.delivered_ratio - ref.ratio) <= 1e-12 * std::max(1.0, ref.ratio)) {
            ++payment_ok;
        }
    }
    return verdict(hours && defaults && baseline_ok == trials && payment_ok == trials,
                   fmt::format("equivalent hours 500/2500: {}; default bounds ({}, {}); baselines {}/{} and "
                               "payments {}/{} match oracle ({} infeasible in both)",
                               hours ? "yes" : "no", bounds.min_hours, bounds.max_hours, baseline_ok, trials,
                               payment_ok, trials, infeasible_agree));
}

// 8 -------------------------------------------------------------------------
std::map<std::string, std::string> snapshot(fs::path const& root) {
    std::map<std::string, std::string> out;
    for (auto const& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path().string());
    }
    return out;
}

Outcome determinism() {
    auto t0 = std::chrono::steady_clock::now();
    auto base = fs::temp_directory_path() / fmt::format("gridalign_accept_{}", std::random_device{}());
    std::vector<std::map<std::string, std::string>> trees;
    std::vector<int> codes;
    Logger quiet = [](std::string const&) {};
    for (int run = 0; run < 2; ++run) {
        auto cfg = load_config(GRIDALIGN_CORPUS_DIR "/corpus.conf");
        cfg.out_dir = base / fmt::format("run{}", run);
        cfg.jobs = run == 0 ? 1 : 4;
        codes.push_back(static_cast<int>(run_ingest(cfg, quiet)));
        codes.push_back(static_cast<int>(run_flatten(cfg, quiet)));
        codes.push_back(static_cast<int>(run_analyze(cfg, quiet)));
        codes.push_back(static_cast<int>(run_report(cfg, quiet)));
        trees.push_back(snapshot(cfg.out_dir));
    }
    std::error_code ec;
    fs::remove_all(base, ec);
    double secs = seconds_since(t0);
    bool codes_ok = std::all_of(codes.begin(), codes.end(), [](int c) { return c == 0; });
    std::size_t differing = 0;
    for (auto const& [name, content] : trees[0]) {
        auto it = trees[1].find(name);
        if (it == trees[1].end() || it->second != content) ++differing;
    }
    bool same = trees[0].size() == trees[1].size() && differing == 0;
    return verdict(codes_ok && same && !trees[0].empty() && secs < 120.0,
                   fmt::format("{} files per run, {} differ (jobs 1 vs 4), exit codes {}, {:.1f} s for two runs "
                               "(limit 120 s)",
                               trees[0].size(), differing, codes_ok ? "all 0" : "non-zero", secs));
}

// 9 -------------------------------------------------------------------------
Outcome dataset_tier() {
    char const* dir = std::getenv("GRIDALIGN_DATASET_DIR");
    if (dir == nullptr || !fs::exists(fs::path(dir) / "metadata.csv")) {
        return {Status::Skip, "GRIDALIGN_DATASET_DIR not set or has no metadata.csv"};
    }
    fs::path root(dir);
    auto metadata = parse_metadata(read_file((root / "metadata.csv").string()));
    auto kept = filter_applicable(metadata, FilterCriteria::screening_defaults(kYear));
    std::set<std::string> ids;
    for (auto const& m : kept) ids.insert(m.tariff_id);

    std::vector<CategoryResult> cats;
    std::vector<TariffProfile> profiles;
    std::size_t unreadable = 0;
    for (auto const& e : fs::directory_iterator(root / "tariffs")) {
        auto name = parse_tariff_filename(e.path().filename().string());
        if (!name || !ids.contains(name->tariff_id)) continue;
        try {
            auto s = load_tariff_file(e.path().string());
            cats.push_back(categorize(s));
            profiles.push_back(profile_tariff(s, kYear));
        } catch (std::exception const&) {
            ++unreadable;
        }
    }
    if (cats.empty()) return {Status::Fail, "no applicable tariffs found in dataset"};
    auto shares = category_shares(cats);
    auto stats = summary_stats(profiles);
    auto pp = [&](TariffCategory c) { return 100.0 * shares.overall.at(c); };
    bool shares_ok = std::abs(pp(TariffCategory::Flat) - 29.2) <= 0.5 &&
                     std::abs(pp(TariffCategory::SeasonalTOU) - 50.4) <= 0.5 &&
                     std::abs(pp(TariffCategory::NonseasonalTOU) - 9.2) <= 0.5 &&
                     std::abs(pp(TariffCategory::SeasonalNonTOU) - 11.2) <= 0.5;
    std::map<std::pair<std::string, std::string>, double> means;
    for (auto const& s : stats) means[{s.season, s.kind}] = s.mean_charge;
    bool means_ok = close_rel(means[{"summer", "energy"}], 0.119, 0.02) &&
                    close_rel(means[{"winter", "energy"}], 0.114, 0.02) &&
                    close_rel(means[{"summer", "demand"}], 9.65, 0.02) &&
                    close_rel(means[{"winter", "demand"}], 8.36, 0.02);
    return verdict(shares_ok && means_ok,
                   fmt::format("{} tariffs ({} unreadable): Flat {:.1f}% SeasonalTOU {:.1f}% NonseasonalTOU {:.1f}% "
                               "SeasonalNonTOU {:.1f}%; energy {:.2f}/{:.2f} c/kWh; demand {:.2f}/{:.2f} $/kW",
                               cats.size(), unreadable, pp(TariffCategory::Flat), pp(TariffCategory::SeasonalTOU),
                               pp(TariffCategory::NonseasonalTOU), pp(TariffCategory::SeasonalNonTOU),
                               100.0 * means[{"summer", "energy"}], 100.0 * means[{"winter", "energy"}],
                               means[{"summer", "demand"}], means[{"winter", "demand"}]));
}

struct Criterion {
    int id;
    char const* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> all = {
        {1, "billing oracle equivalence", billing_oracle},
        {2, "flattening conservation", flattening_conservation},
        {3, "categorization suite", categorization_suite},
        {4, "pearson properties", pearson_property},
        {5, "MEF regression", mef_regression},
        {6, "geospatial assignment", geospatial},
        {7, "IBDR arithmetic", ibdr_arithmetic},
        {8, "pipeline determinism", determinism},
        {9, "dataset replication (optional)", dataset_tier},
    };
    int only = 0;
    if (argc == 3 && std::string(argv[1]) == "--criterion") only = std::atoi(argv[2]);

    int failures = 0, skips = 0;
    for (auto const& c : all) {
        if (only != 0 && c.id != only) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (std::exception const& e) {
            o = {Status::Fail, fmt::format("exception: {}", e.what())};
        }
        char const* tag = o.status == Status::Pass ? "PASS" : (o.status == Status::Fail ? "FAIL" : "SKIP");
        std::cout << fmt::format("[{}] {}. {}: {}", tag, c.id, c.name, o.detail) << std::endl;
        if (o.status == Status::Fail) ++failures;
        if (o.status == Status::Skip) ++skips;
    }
    if (failures > 0) return 1;
    if (only != 0 && skips > 0) return 77;
    return 0;
}
