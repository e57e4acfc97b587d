#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gridalign/analysis.hpp"
#include "gridalign/billing.hpp"
#include "gridalign/csv.hpp"
#include "gridalign/emissions.hpp"
#include "gridalign/geo.hpp"
#include "gridalign/idropp.hpp"
#include "gridalign/pipeline.hpp"

namespace py = pybind11;
using namespace gridalign;

namespace {

using Grid = std::array<std::array<double, 24>, 12>;

LoadProfile make_load(int year, int first_month, std::vector<double> kw) {
    LoadProfile l;
    l.start = DateHour{year, first_month, 1, 0};
    l.kw = std::move(kw);
    return l;
}

GenEmisSeries make_gen_emis(int year, std::vector<double> gen, std::vector<double> emis) {
    GenEmisSeries s;
    s.start = DateHour{year, 1, 1, 0};
    s.generation_mwh = std::move(gen);
    s.emissions_kg = std::move(emis);
    return s;
}

IbdrProgram make_program(std::map<std::string, std::string> const& fields) {
    IbdrProgram p;
    for (auto const& [k, v] : fields) {
        auto f = parse_column_id(k);
        if (!f) throw py::key_error("unknown program field '" + k + "'");
        p.set(*f, v);
    }
    return p;
}

py::dict category_dict(CategoryResult const& c) {
    py::dict d;
    d["energy"] = std::string(to_string(c.energy));
    d["demand"] = std::string(to_string(c.demand));
    d["overall"] = std::string(to_string(c.overall));
    return d;
}

}  // namespace

PYBIND11_MODULE(_gridalign, m) {
    m.doc() = "gridalign core bindings";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<BillingError>(m, "BillingError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<TariffSchedule>(m, "Tariff")
        .def_readonly("tariff_id", &TariffSchedule::tariff_id)
        .def_property_readonly("item_count", [](TariffSchedule const& s) { return s.items.size(); })
        .def("serialize", &serialize_tariff)
        .def("__repr__", [](TariffSchedule const& s) {
            return "<Tariff " + s.tariff_id + " with " + std::to_string(s.items.size()) + " items>";
        });

    m.def(
        "parse_tariff", [](std::string const& text, std::string id) { return parse_tariff(text, std::move(id)); },
        py::arg("text"), py::arg("tariff_id") = "");

    py::class_<BillBreakdown>(m, "Bill")
        .def_readonly("total", &BillBreakdown::total)
        .def_readonly("warnings", &BillBreakdown::warnings)
        .def_property_readonly("usage_total", &BillBreakdown::usage_total)
        .def("__repr__", [](BillBreakdown const& b) { return "<Bill total=" + std::to_string(b.total) + ">"; });

    m.def(
        "compute_bill",
        [](TariffSchedule const& s, int year, int first_month, std::vector<double> kw) {
            return compute_bill(s, make_load(year, first_month, std::move(kw)));
        },
        py::arg("tariff"), py::arg("year"), py::arg("first_month"), py::arg("kw"),
        "Bill whole months of hourly kW starting at the first hour of `first_month`.");

    m.def(
        "flatten",
        [](TariffSchedule const& s, int year, double reference_kw, std::optional<std::string> kind) {
            FlattenOptions o{reference_kw, std::nullopt};
            if (kind) o.only_kind = parse_charge_kind(*kind);
            auto r = flatten_tariff(s, year, o);
            return py::make_tuple(r.series.values, r.usage_bill);
        },
        py::arg("tariff"), py::arg("year"), py::arg("reference_kw") = 1000.0, py::arg("kind") = py::none(),
        "Hourly $/kWh for a flat reference load, and the matching bill without customer charges.");

    m.def(
        "month_hour",
        [](std::vector<double> values, int year) {
            HourlySeries s;
            s.start = DateHour{year, 1, 1, 0};
            s.values = std::move(values);
            return month_hour_average(s).cells;
        },
        py::arg("values"), py::arg("year"), "12x24 averages of an hourly series starting on January 1. NaN is missing.");

    m.def("pearson", [](std::vector<double> const& x, std::vector<double> const& y) { return pearson(x, y); });
    m.def("categorize", [](TariffSchedule const& s) { return category_dict(categorize(s)); });

    m.def(
        "average_aef",
        [](int year, std::vector<double> gen, std::vector<double> emis) -> Grid {
            return average_aef(make_gen_emis(year, std::move(gen), std::move(emis))).cells;
        },
        py::arg("year"), py::arg("generation_mwh"), py::arg("emissions_kg"));
    m.def(
        "estimate_mef",
        [](int year, std::vector<double> gen, std::vector<double> emis) -> Grid {
            return estimate_mef(make_gen_emis(year, std::move(gen), std::move(emis))).cells;
        },
        py::arg("year"), py::arg("generation_mwh"), py::arg("emissions_kg"));

    py::class_<RegionSet>(m, "RegionSet")
        .def_static("from_geojson", [](std::string const& text) { return parse_regions_geojson(text); });
    m.def(
        "assign_region",
        [](RegionSet const& regions, double lon, double lat) {
            auto a = assign_region(LonLat{lon, lat}, regions);
            return py::make_tuple(a.region, a.on_boundary);
        },
        py::arg("regions"), py::arg("lon"), py::arg("lat"));

    m.def("equivalent_hours", &equivalent_hours, py::arg("payment_usd_per_kw"), py::arg("reference_usd_per_kwh"));
    m.def(
        "duration_bounds",
        [](std::map<std::string, std::string> const& fields) {
            auto b = duration_bounds(make_program(fields));
            return py::make_tuple(b.min_hours, b.max_hours);
        },
        py::arg("fields") = std::map<std::string, std::string>{});

    m.def(
        "run_stage",
        [](std::string const& stage, fs::path const& config, std::optional<fs::path> out, std::optional<int> year,
           std::optional<unsigned> jobs) {
            auto cfg = load_config(config);
            if (out) cfg.out_dir = *out;
            if (year) cfg.year = *year;
            if (jobs) cfg.jobs = *jobs;
            Logger log = [](std::string const&) {};
            py::gil_scoped_release release;
            ExitCode code;
            if (stage == "ingest") code = run_ingest(cfg, log);
            else if (stage == "flatten") code = run_flatten(cfg, log);
            else if (stage == "analyze") code = run_analyze(cfg, log);
            else if (stage == "report") code = run_report(cfg, log);
            else throw std::invalid_argument("unknown stage '" + stage + "'");
            return static_cast<int>(code);
        },
        py::arg("stage"), py::arg("config"), py::arg("out") = py::none(), py::arg("year") = py::none(),
        py::arg("jobs") = py::none(), "Runs one batch stage and returns its exit code.");
}
