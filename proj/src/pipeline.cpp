#include "gridalign/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "gridalign/billing.hpp"
#include "gridalign/csv.hpp"
#include "gridalign/emissions.hpp"
#include "gridalign/geo.hpp"
#include "gridalign/idropp.hpp"

namespace gridalign {

// Config ---------------------------------------------------------------------

std::set<int> parse_month_set(std::string_view text) {
    std::set<int> months;
    std::string_view rest = text;
    auto month_of = [&](std::string_view s) {
        long long m = 0;
        try {
            m = parse_integer(s);
        } catch (std::invalid_argument const&) {
            throw ConfigError(fmt::format("bad month list '{}'", text));
        }
        if (m < 1 || m > 12) throw ConfigError(fmt::format("month {} out of range in '{}'", m, text));
        return static_cast<int>(m);
    };
    while (!rest.empty()) {
        auto comma = rest.find(',');
        auto part = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (part.empty()) continue;
        if (auto dash = part.find('-'); dash != std::string_view::npos) {
            int a = month_of(part.substr(0, dash));
            int b = month_of(part.substr(dash + 1));
            if (a > b) throw ConfigError(fmt::format("descending month range in '{}'", text));
            for (int m = a; m <= b; ++m) months.insert(m);
        } else {
            months.insert(month_of(part));
        }
    }
    return months;
}

void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value, fs::path const& base_dir) {
    auto path = [&] {
        fs::path p{std::string(value)};
        return (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    };
    auto number = [&] {
        try {
            return parse_number(value);
        } catch (std::invalid_argument const&) {
            throw ConfigError(fmt::format("'{}' expects a number, got '{}'", key, value));
        }
    };
    if (key == "tariff_dir") cfg.tariff_dir = path();
    else if (key == "metadata") cfg.metadata_file = path();
    else if (key == "aef_dir") cfg.aef_dir = path();
    else if (key == "dam_dir") cfg.dam_dir = path();
    else if (key == "genemis_dir") cfg.genemis_dir = path();
    else if (key == "regions") cfg.regions_file = path();
    else if (key == "gazetteer") cfg.gazetteer_file = path();
    else if (key == "programs") cfg.programs_file = path();
    else if (key == "program_metadata") cfg.program_metadata_file = path();
    else if (key == "out") cfg.out_dir = path();
    else if (key == "year") cfg.year = static_cast<int>(number());
    else if (key == "summer_months") cfg.seasons.summer_months = parse_month_set(value);
    else if (key == "reference_kw") cfg.reference_kw = number();
    else if (key == "reference_price") cfg.reference_price = number();
    else if (key == "jobs") cfg.jobs = static_cast<unsigned>(std::max(1.0, number()));
    else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void apply_config_text(RunConfig& cfg, std::string_view text, fs::path const& base_dir) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
        }
        apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    }
}

RunConfig load_config(fs::path const& path) {
    std::string text;
    try {
        text = read_file(path.string());
    } catch (std::runtime_error const& e) {
        throw ConfigError(e.what());
    }
    RunConfig cfg;
    apply_config_text(cfg, text, path.parent_path());
    return cfg;
}

void validate_config(RunConfig const& cfg) {
    if (cfg.year < 2000) throw ConfigError(fmt::format("year {} is before 2000", cfg.year));
    if (!(cfg.reference_kw > 0.0)) throw ConfigError("reference_kw must be positive");
    if (!(cfg.reference_price > 0.0)) throw ConfigError("reference_price must be positive");
    for (auto const* p : {&cfg.tariff_dir, &cfg.metadata_file, &cfg.aef_dir, &cfg.dam_dir, &cfg.genemis_dir,
                          &cfg.regions_file, &cfg.gazetteer_file, &cfg.programs_file, &cfg.program_metadata_file}) {
        if (!p->empty() && !fs::exists(*p)) {
            throw ConfigError(fmt::format("input path '{}' does not exist", p->string()));
        }
    }
    if (cfg.out_dir.empty()) throw ConfigError("no output directory configured");
}

void parallel_for(std::size_t n, unsigned jobs, std::function<void(std::size_t)> const& fn) {
    unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Shared helpers --------------------------------------------------------------

namespace {

struct ManifestRow {
    std::string category;
    std::string file;
    bool ok = true;
    std::size_t records = 0;
    std::string message;
};

constexpr std::string_view kManifestHeader = "category,file,status,records,message";

std::vector<fs::path> list_csv(fs::path const& dir) {
    std::vector<fs::path> files;
    if (dir.empty()) return files;
    for (auto const& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void ensure_dir(fs::path const& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create directory '{}': {}", p.string(), ec.message()));
}

void reset_dir(fs::path const& p) {
    std::error_code ec;
    fs::remove_all(p, ec);
    ensure_dir(p);
}

std::string join_messages(std::vector<std::string> const& msgs) {
    std::string out;
    for (auto const& m : msgs) out += (out.empty() ? "" : " | ") + m;
    return out;
}

std::string opt_number(std::optional<double> v) { return v ? format_number(*v) : std::string{}; }

/// Region of a DAM node file `<region>__<node>.csv` or `<region>.csv`.
std::string node_region(std::string const& stem) {
    auto sep = stem.find("__");
    return sep == std::string::npos ? stem : stem.substr(0, sep);
}

struct TariffEntry {
    std::string key;   // file stem: <tariff_id>_<bundling>
    std::string file;  // file name inside tariff_dir
    std::string region;
    std::string status;
};

constexpr std::string_view kTariffRegionsHeader = "tariff,file,iso_label,status,on_boundary";

std::vector<TariffEntry> read_tariff_regions(fs::path const& path) {
    CsvTable t = parse_csv(read_file(path.string()));
    std::vector<TariffEntry> out;
    for (auto const& row : t.rows) {
        if (row.size() < 4) continue;
        out.push_back(TariffEntry{row[0], row[1], row[2], row[3]});
    }
    return out;
}

bool analyzed(TariffEntry const& e) { return e.status != "excluded"; }

std::map<std::string, MonthHourMatrix> read_matrices(fs::path const& dir, std::string const& prefix) {
    std::map<std::string, MonthHourMatrix> out;
    if (!fs::exists(dir)) return out;
    for (auto const& file : list_csv(dir)) {
        auto parsed = parse_matrix_filename(file.filename().string());
        if (!parsed) continue;
        out.emplace(parsed->first, parse_matrix(read_file(file.string()), prefix + parsed->first, parsed->second));
    }
    return out;
}

std::string month_name(int m) {
    static constexpr std::array<std::string_view, 12> names = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    return std::string(names[static_cast<std::size_t>(m - 1)]);
}

}  // namespace

// Ingest -----------------------------------------------------------------------

ExitCode run_ingest(RunConfig const& cfg, Logger const& log) {
    try {
        validate_config(cfg);
        ensure_dir(cfg.out_dir / "ingest");
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }

    std::vector<ManifestRow> manifest;
    try {
        // Tariffs
        auto tariff_files = list_csv(cfg.tariff_dir);
        std::vector<ManifestRow> tariff_rows(tariff_files.size());
        parallel_for(tariff_files.size(), cfg.jobs, [&](std::size_t i) {
            auto& row = tariff_rows[i];
            row.category = "tariff";
            row.file = tariff_files[i].filename().string();
            std::vector<std::string> warnings;
            try {
                auto s = load_tariff_file(tariff_files[i].string(), &warnings);
                row.records = s.items.size();
                row.message = join_messages(warnings);
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
        });
        manifest.insert(manifest.end(), tariff_rows.begin(), tariff_rows.end());

        // Metadata, gazetteer, regions
        std::vector<TariffMetadata> metadata;
        std::optional<FilterCriteria> criteria;
        if (!cfg.metadata_file.empty()) {
            ManifestRow row{"metadata", cfg.metadata_file.filename().string(), true, 0, {}};
            try {
                std::vector<std::string> warnings;
                metadata = parse_metadata(read_file(cfg.metadata_file.string()), &warnings);
                row.records = metadata.size();
                row.message = join_messages(warnings);
                criteria = FilterCriteria::screening_defaults(cfg.year);
                criteria->reference_demand_kw = cfg.reference_kw;
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
            manifest.push_back(row);
        }
        Gazetteer gazetteer;
        if (!cfg.gazetteer_file.empty()) {
            ManifestRow row{"gazetteer", cfg.gazetteer_file.filename().string(), true, 0, {}};
            try {
                gazetteer = parse_gazetteer(read_file(cfg.gazetteer_file.string()));
                row.records = gazetteer.size();
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
            manifest.push_back(row);
        }
        RegionSet regions;
        if (!cfg.regions_file.empty()) {
            ManifestRow row{"regions", cfg.regions_file.filename().string(), true, 0, {}};
            try {
                regions = parse_regions_geojson(read_file(cfg.regions_file.string()));
                row.records = regions.regions().size();
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
            manifest.push_back(row);
        }

        // Signals
        auto signal_rows = [&](fs::path const& dir, std::string const& category, auto&& parse) {
            auto files = list_csv(dir);
            std::vector<ManifestRow> rows(files.size());
            parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
                rows[i] = ManifestRow{category, files[i].filename().string(), true, 0, {}};
                try {
                    rows[i].records = parse(read_file(files[i].string()), files[i].stem().string());
                } catch (std::exception const& e) {
                    rows[i].ok = false;
                    rows[i].message = e.what();
                }
            });
            manifest.insert(manifest.end(), rows.begin(), rows.end());
        };
        signal_rows(cfg.aef_dir, "aef", [](std::string const& text, std::string label) {
            return parse_hourly(text, std::move(label), Unit::KgCo2ePerMwh).values.size();
        });
        signal_rows(cfg.dam_dir, "dam", [](std::string const& text, std::string label) {
            return parse_price_series(text, std::move(label), Unit::UsdPerMwh).values.size();
        });
        signal_rows(cfg.genemis_dir, "genemis", [](std::string const& text, std::string label) {
            return parse_gen_emis(text, std::move(label)).generation_mwh.size();
        });

        // Demand-response programs
        if (!cfg.programs_file.empty()) {
            ManifestRow row{"programs", cfg.programs_file.filename().string(), true, 0, {}};
            try {
                auto programs = parse_programs(read_file(cfg.programs_file.string()));
                row.records = programs.size();
                std::vector<std::string> problems;
                for (std::size_t i = 0; i < programs.size(); ++i) {
                    for (auto const& v : validate_program(programs[i])) {
                        problems.push_back(fmt::format("program {}: {}", i + 1, v));
                    }
                }
                row.ok = problems.empty();
                row.message = join_messages(problems);
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
            manifest.push_back(row);
        }
        if (!cfg.program_metadata_file.empty()) {
            ManifestRow row{"program_metadata", cfg.program_metadata_file.filename().string(), true, 0, {}};
            try {
                row.records = parse_parameter_metadata(read_file(cfg.program_metadata_file.string())).size();
            } catch (std::exception const& e) {
                row.ok = false;
                row.message = e.what();
            }
            manifest.push_back(row);
        }

        // Region assignment for each parsed tariff
        std::map<std::string, TariffMetadata const*> meta_by_id;
        std::set<std::string> applicable;
        if (criteria) {
            for (auto const& m : metadata) meta_by_id.emplace(m.tariff_id, &m);
            for (auto const& m : filter_applicable(metadata, *criteria)) applicable.insert(m.tariff_id);
        }
        std::string regions_csv = std::string(kTariffRegionsHeader) + "\n";
        for (auto const& row : tariff_rows) {
            if (!row.ok) continue;
            auto parsed = parse_tariff_filename(row.file);
            std::string key = fs::path(row.file).stem().string();
            std::string label(kOtherRegion);
            std::string status = "no_metadata";
            bool boundary = false;
            if (auto it = meta_by_id.find(parsed->tariff_id); it != meta_by_id.end()) {
                auto const& m = *it->second;
                std::optional<LonLat> where;
                if (m.latitude && m.longitude) {
                    where = LonLat{*m.longitude, *m.latitude};
                } else if (!m.zip.empty()) {
                    try {
                        where = zip_to_coords(m.zip, gazetteer);
                    } catch (std::exception const& e) {
                        log(fmt::format("warning: {}: {}", key, e.what()));
                    }
                }
                if (!applicable.contains(m.tariff_id)) {
                    status = "excluded";
                } else if (!regions.regions().empty() && where) {
                    auto a = assign_region(*where, regions);
                    label = a.region;
                    boundary = a.on_boundary;
                    status = label == kOtherRegion ? "other" : "assigned";
                    if (a.overlapping) log(fmt::format("warning: {} lies in overlapping regions; using {}", key, label));
                } else if (!m.iso_label.empty()) {
                    label = m.iso_label;
                    status = label == kOtherRegion ? "other" : "assigned";
                } else {
                    status = "other";
                }
            }
            regions_csv += csv_join({key, row.file, label, status, boundary ? "1" : "0"}) + "\n";
        }
        write_file((cfg.out_dir / "ingest" / "tariff_regions.csv").string(), regions_csv);
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }

    std::size_t failures = 0;
    std::string out = std::string(kManifestHeader) + "\n";
    for (auto const& r : manifest) {
        if (!r.ok) {
            ++failures;
            log(fmt::format("invalid {} '{}': {}", r.category, r.file, r.message));
        }
        out += csv_join({r.category, r.file, r.ok ? "ok" : "failed", std::to_string(r.records), r.message}) + "\n";
    }
    try {
        write_file((cfg.out_dir / "manifest.csv").string(), out);
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }
    log(fmt::format("ingest: {} input file(s), {} failure(s)", manifest.size(), failures));
    return failures == 0 ? ExitCode::Success : ExitCode::ValidationFailures;
}

// Flatten ---------------------------------------------------------------------

namespace {

std::map<std::string, std::vector<std::string>> ok_files_by_category(fs::path const& manifest_path) {
    CsvTable t = parse_csv(read_file(manifest_path.string()));
    std::map<std::string, std::vector<std::string>> out;
    for (auto const& row : t.rows) {
        if (row.size() >= 3 && row[2] == "ok") out[row[0]].push_back(row[1]);
    }
    return out;
}

}  // namespace

ExitCode run_flatten(RunConfig const& cfg, Logger const& log) {
    auto manifest_path = cfg.out_dir / "manifest.csv";
    auto regions_path = cfg.out_dir / "ingest" / "tariff_regions.csv";
    if (!fs::exists(manifest_path) || !fs::exists(regions_path)) {
        log(fmt::format("fatal: ingest outputs missing under '{}'; run the ingest stage first", cfg.out_dir.string()));
        return ExitCode::FatalIo;
    }

    std::size_t failures = 0;
    try {
        auto ok = ok_files_by_category(manifest_path);
        auto tariffs = read_tariff_regions(regions_path);
        tariffs.erase(std::remove_if(tariffs.begin(), tariffs.end(), [](auto const& e) { return !analyzed(e); }),
                      tariffs.end());

        fs::path root = cfg.out_dir / "flatten";
        reset_dir(root);
        for (auto sub : {"tariffs", "tariff_energy", "tariff_demand", "aef", "mef", "dam"}) ensure_dir(root / sub);

        struct TariffOutput {
            bool ok = false;
            std::string error;
            std::vector<std::string> warnings;
            TariffProfile profile;
            double flattened_usd = 0.0;
            double bill_usd = 0.0;
        };
        std::vector<TariffOutput> results(tariffs.size());
        parallel_for(tariffs.size(), cfg.jobs, [&](std::size_t i) {
            auto& r = results[i];
            try {
                auto s = load_tariff_file((cfg.tariff_dir / tariffs[i].file).string());
                s.tariff_id = tariffs[i].key;
                auto full = flatten_tariff(s, cfg.year, FlattenOptions{cfg.reference_kw, std::nullopt});
                r.warnings = std::move(full.warnings);
                for (double v : full.series.values) r.flattened_usd += v * cfg.reference_kw;
                r.bill_usd = full.usage_bill;
                r.profile = profile_tariff(s, cfg.year, cfg.reference_kw);
                r.ok = true;
            } catch (std::exception const& e) {
                r.error = e.what();
            }
        });

        std::string charges = "tariff,month,hours,energy_sum,demand_usd_per_kw,has_energy,has_demand\n";
        std::string conservation = "tariff,flattened_usd,bill_usd,rel_err\n";
        for (std::size_t i = 0; i < tariffs.size(); ++i) {
            auto const& r = results[i];
            auto const& key = tariffs[i].key;
            for (auto const& w : r.warnings) log(fmt::format("warning: {}", w));
            if (!r.ok) {
                ++failures;
                log(fmt::format("flatten failed for {}: {}", key, r.error));
                continue;
            }
            auto write_matrix = [&](std::string const& sub, MonthHourMatrix m) {
                m.label = key;
                write_file((root / sub / matrix_filename(m)).string(), serialize_matrix(m));
            };
            write_matrix("tariffs", r.profile.combined);
            write_matrix("tariff_energy", r.profile.energy);
            write_matrix("tariff_demand", r.profile.demand);
            for (int m = 0; m < 12; ++m) {
                charges += csv_join({key, std::to_string(m + 1), std::to_string(r.profile.hours[m]),
                                     format_number(r.profile.energy_sum[m]),
                                     format_number(r.profile.demand_usd_per_kw[m]), r.profile.has_energy ? "1" : "0",
                                     r.profile.has_demand ? "1" : "0"}) +
                           "\n";
            }
            double denom = std::max(std::abs(r.bill_usd), 1e-300);
            conservation += csv_join({key, format_number(r.flattened_usd), format_number(r.bill_usd),
                                      format_number(std::abs(r.flattened_usd - r.bill_usd) / denom)}) +
                            "\n";
        }
        write_file((root / "tariff_charges.csv").string(), charges);
        write_file((root / "conservation.csv").string(), conservation);

        // Signals
        std::set<std::string> aef_regions;
        for (auto const& file : ok["aef"]) {
            try {
                auto label = fs::path(file).stem().string();
                auto series = parse_hourly(read_file((cfg.aef_dir / file).string()), label, Unit::KgCo2ePerMwh);
                auto m = month_hour_average(series);
                write_file((root / "aef" / matrix_filename(m)).string(), serialize_matrix(m));
                aef_regions.insert(label);
            } catch (std::exception const& e) {
                ++failures;
                log(fmt::format("flatten failed for aef '{}': {}", file, e.what()));
            }
        }
        for (auto const& file : ok["genemis"]) {
            try {
                auto region = fs::path(file).stem().string();
                auto series = parse_gen_emis(read_file((cfg.genemis_dir / file).string()), region);
                auto mef = estimate_mef(series);
                write_file((root / "mef" / matrix_filename(mef)).string(), serialize_matrix(mef));
                if (!aef_regions.contains(region)) {
                    auto aef = average_aef(series);
                    write_file((root / "aef" / matrix_filename(aef)).string(), serialize_matrix(aef));
                }
            } catch (std::exception const& e) {
                ++failures;
                log(fmt::format("flatten failed for genemis '{}': {}", file, e.what()));
            }
        }
        for (auto const& file : ok["dam"]) {
            try {
                auto label = fs::path(file).stem().string();
                auto series = parse_price_series(read_file((cfg.dam_dir / file).string()), label, Unit::UsdPerMwh);
                auto m = month_hour_average(series);
                write_file((root / "dam" / matrix_filename(m)).string(), serialize_matrix(m));
            } catch (std::exception const& e) {
                ++failures;
                log(fmt::format("flatten failed for dam '{}': {}", file, e.what()));
            }
        }
        log(fmt::format("flatten: {} tariff(s), {} failure(s)", tariffs.size(), failures));
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }
    return failures == 0 ? ExitCode::Success : ExitCode::ValidationFailures;
}

// Analyze ---------------------------------------------------------------------

ExitCode run_analyze(RunConfig const& cfg, Logger const& log) {
    fs::path flat = cfg.out_dir / "flatten";
    auto regions_path = cfg.out_dir / "ingest" / "tariff_regions.csv";
    if (!fs::exists(regions_path)) {
        log("fatal: ingest outputs missing; run the ingest stage first");
        return ExitCode::FatalIo;
    }
    if (!fs::exists(flat / "tariff_charges.csv")) {
        log("fatal: flatten outputs missing; run the flatten stage first");
        return ExitCode::FatalIo;
    }

    try {
        fs::path root = cfg.out_dir / "analysis";
        reset_dir(root);

        auto tariffs = read_tariff_regions(regions_path);
        tariffs.erase(std::remove_if(tariffs.begin(), tariffs.end(), [](auto const& e) { return !analyzed(e); }),
                      tariffs.end());
        auto combined = read_matrices(flat / "tariffs", "tariff/");
        auto energy = read_matrices(flat / "tariff_energy", "tariff/");
        auto demand = read_matrices(flat / "tariff_demand", "tariff/");
        auto aef = read_matrices(flat / "aef", "aef/");
        auto mef = read_matrices(flat / "mef", "mef/");
        auto dam = read_matrices(flat / "dam", "dam/");

        // Only tariffs that flattened successfully.
        tariffs.erase(std::remove_if(tariffs.begin(), tariffs.end(),
                                     [&](auto const& e) { return !combined.contains(e.key); }),
                      tariffs.end());

        // Categories
        std::vector<CategoryResult> categories(tariffs.size());
        parallel_for(tariffs.size(), cfg.jobs, [&](std::size_t i) {
            categories[i] = categorize(load_tariff_file((cfg.tariff_dir / tariffs[i].file).string()));
        });
        std::string categories_csv = "tariff,energy,demand,overall\n";
        for (std::size_t i = 0; i < tariffs.size(); ++i) {
            categories_csv += csv_join({tariffs[i].key, std::string(to_string(categories[i].energy)),
                                        std::string(to_string(categories[i].demand)),
                                        std::string(to_string(categories[i].overall))}) +
                              "\n";
        }
        write_file((root / "categories.csv").string(), categories_csv);

        // Correlations: AEF vs tariff per region, MEF vs DAM per node.
        std::vector<SignalPair> aef_pairs;
        for (auto const& t : tariffs) {
            if (t.region == kOtherRegion) continue;
            auto a = aef.find(t.region);
            if (a == aef.end()) continue;
            aef_pairs.push_back(SignalPair{t.region, a->second, combined.at(t.key)});
        }
        std::vector<SignalPair> mef_pairs;
        for (auto const& [node, m] : dam) {
            auto region = node_region(node);
            auto a = mef.find(region);
            if (a == mef.end()) continue;
            mef_pairs.push_back(SignalPair{region, a->second, m});
        }
        auto aef_records = correlation_table(aef_pairs);
        auto mef_records = correlation_table(mef_pairs);
        std::string corr_csv = "label_a,label_b,region,month,r,n\n";
        for (auto const* records : {&aef_records, &mef_records}) {
            for (auto const& r : *records) {
                corr_csv += csv_join({r.label_a, r.label_b, r.region, std::to_string(r.month), opt_number(r.r),
                                      std::to_string(r.n)}) +
                            "\n";
            }
        }
        write_file((root / "correlations.csv").string(), corr_csv);

        // Premiums
        std::string prem_csv = "label,region,month,premium,reason\n";
        std::vector<TariffMonthValue> tariff_premiums;
        for (auto const& t : tariffs) {
            auto const& m = combined.at(t.key);
            for (int month = 1; month <= 12; ++month) {
                auto p = peak_premium(m, month);
                prem_csv += csv_join({m.label, t.region, std::to_string(month), opt_number(p.ratio), p.reason}) + "\n";
                if (t.region != kOtherRegion) tariff_premiums.push_back(TariffMonthValue{t.key, t.region, month, p.ratio});
            }
        }
        for (auto const& [node, m] : dam) {
            for (int month = 1; month <= 12; ++month) {
                Premium p;
                try {
                    p = peak_premium(m, month);
                } catch (ReconcileError const&) {
                    p = Premium{std::nullopt, "no data"};
                }
                prem_csv += csv_join({m.label, node_region(node), std::to_string(month), opt_number(p.ratio), p.reason}) +
                            "\n";
            }
        }
        write_file((root / "premiums.csv").string(), prem_csv);

        // Regime map
        std::vector<TariffMonthValue> tariff_corrs;
        for (auto const& r : aef_records) {
            tariff_corrs.push_back(TariffMonthValue{r.label_b.substr(std::string("tariff/").size()), r.region, r.month, r.r});
        }
        std::map<std::string, std::pair<double, double>> ibdr_ranges;
        if (!cfg.programs_file.empty()) {
            for (auto const& p : parse_programs(read_file(cfg.programs_file.string()))) {
                auto const& region = p.get(ProgramField::Region);
                auto const& pay = p.get(ProgramField::PayFunction);
                if (!region || !pay) continue;
                auto rate = parse_payment_rate(*pay);
                if (!rate || rate->basis != RateBasis::PerKw) continue;
                auto [it, inserted] = ibdr_ranges.emplace(*region, std::pair{rate->value, rate->value});
                if (!inserted) {
                    it->second.first = std::min(it->second.first, rate->value);
                    it->second.second = std::max(it->second.second, rate->value);
                }
            }
        }
        auto regime = regime_map(tariff_premiums, tariff_corrs, ibdr_ranges);
        std::string regime_csv = "record,tariff,region,month,peak_premium,r_aef_tariff,ibdr_min_rate,ibdr_max_rate\n";
        for (auto const& r : regime.rows) {
            regime_csv += csv_join({"row", r.tariff_id, r.region, std::to_string(r.month), opt_number(r.peak_premium),
                                    opt_number(r.r_aef_tariff), "", ""}) +
                          "\n";
        }
        for (auto const& b : regime.boxes) {
            regime_csv += csv_join({"box", "", b.region, "", "", "", format_number(b.ibdr_min_rate),
                                    format_number(b.ibdr_max_rate)}) +
                          "\n";
        }
        write_file((root / "regime_map.csv").string(), regime_csv);

        // Summary statistics
        std::map<std::string, TariffProfile> profiles;
        {
            CsvTable t = parse_csv(read_file((flat / "tariff_charges.csv").string()));
            for (auto const& row : t.rows) {
                auto& p = profiles[row[0]];
                p.tariff_id = row[0];
                auto m = static_cast<std::size_t>(parse_integer(row[1]) - 1);
                p.hours[m] = static_cast<int>(parse_integer(row[2]));
                p.energy_sum[m] = parse_number(row[3]);
                p.demand_usd_per_kw[m] = parse_number(row[4]);
                p.has_energy = row[5] == "1";
                p.has_demand = row[6] == "1";
            }
        }
        std::vector<TariffProfile> profile_list;
        for (auto const& t : tariffs) {
            auto it = profiles.find(t.key);
            if (it == profiles.end()) continue;
            it->second.energy = energy.at(t.key);
            it->second.demand = demand.at(t.key);
            it->second.combined = combined.at(t.key);
            profile_list.push_back(it->second);
        }
        auto stats = summary_stats(profile_list, cfg.seasons);
        std::string stats_csv = "season,kind,n_tariffs,mean_charge,n_spread,mean_spread,p95_spread\n";
        for (auto const& s : stats) {
            stats_csv += csv_join({s.season, s.kind, std::to_string(s.n_tariffs), format_number(s.mean_charge),
                                   std::to_string(s.n_spread), format_number(s.mean_spread),
                                   format_number(s.p95_spread)}) +
                         "\n";
        }
        write_file((root / "summary_stats.csv").string(), stats_csv);

        // Text summary
        std::string text = fmt::format("tariffs analyzed: {}\n", tariffs.size());
        auto shares = category_shares(categories);
        for (auto const& [name, table] : {std::pair{"overall", &shares.overall}, std::pair{"energy", &shares.energy},
                                          std::pair{"demand", &shares.demand}}) {
            text += fmt::format("category shares ({}):", name);
            for (auto const& [cat, frac] : *table) text += fmt::format(" {} {:.1f}%", to_string(cat), 100.0 * frac);
            text += "\n";
        }

        auto region_means = [&](std::vector<CorrelationRecord> const& recs, std::string const& title) {
            std::map<std::string, std::pair<double, std::size_t>> acc;
            for (auto const& r : recs) {
                auto& a = acc[r.region];
                if (r.r) {
                    a.first += *r.r;
                    ++a.second;
                }
            }
            text += fmt::format("mean correlation {}:\n", title);
            for (auto const& [region, a] : acc) {
                if (a.second == 0) {
                    text += fmt::format("  {}: undefined (0 samples)\n", region);
                } else {
                    text += fmt::format("  {}: {:.4f} ({} samples)\n", region, a.first / a.second, a.second);
                }
            }
        };
        region_means(aef_records, "AEF-tariff");
        region_means(mef_records, "MEF-DAM");

        auto flips = [&](std::vector<CorrelationRecord> const& recs, std::string const& title) {
            std::array<std::map<std::string, double>, 12> by_month;
            for (auto const& r : recs) {
                if (r.r) by_month[static_cast<std::size_t>(r.month - 1)][r.label_b] = *r.r;
            }
            text += fmt::format("flip fraction {} (consecutive months):\n", title);
            for (int m = 1; m < 12; ++m) {
                try {
                    auto f = flip_fraction(by_month[static_cast<std::size_t>(m - 1)], by_month[static_cast<std::size_t>(m)]);
                    text += fmt::format("  {}->{}: {:.4f} ({}/{} nodes, {} zero)\n", month_name(m), month_name(m + 1),
                                        f.fraction, f.flips, f.nodes, f.zeros);
                } catch (std::invalid_argument const&) {
                }
            }
        };
        flips(aef_records, "AEF-tariff");
        flips(mef_records, "MEF-DAM");

        text += "MEF/AEF ratio by region:\n";
        for (auto const& [region, m] : mef) {
            auto a = aef.find(region);
            if (a == aef.end()) continue;
            try {
                auto s = mef_aef_summary(m, a->second);
                text += fmt::format("  {}: mean {:.4f}, min {:.4f}, max {:.4f} ({} cells)\n", region, s.mean, s.min,
                                    s.max, s.cells);
            } catch (ReconcileError const&) {
            }
        }
        text += fmt::format("regime map: {} rows, {} boxes, {} dropped\n", regime.rows.size(), regime.boxes.size(),
                            regime.dropped);
        for (auto const& b : regime.boxes) {
            text += fmt::format("  IBDR {}: {:.2f}-{:.2f} $/kW = {:.0f}-{:.0f} h at {:.3f} $/kWh\n", b.region,
                                b.ibdr_min_rate, b.ibdr_max_rate,
                                equivalent_hours(b.ibdr_min_rate, cfg.reference_price),
                                equivalent_hours(b.ibdr_max_rate, cfg.reference_price), cfg.reference_price);
        }
        write_file((root / "summary.txt").string(), text);
        log(fmt::format("analyze: {} tariff(s), {} correlation record(s)", tariffs.size(),
                        aef_records.size() + mef_records.size()));
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }
    return ExitCode::Success;
}

// Report ----------------------------------------------------------------------

ExitCode run_report(RunConfig const& cfg, Logger const& log, std::string* report) {
    auto manifest = cfg.out_dir / "manifest.csv";
    auto summary = cfg.out_dir / "analysis" / "summary.txt";
    auto conservation = cfg.out_dir / "flatten" / "conservation.csv";
    for (auto const& [path, stage] : {std::pair{manifest, "ingest"}, std::pair{conservation, "flatten"},
                                      std::pair{summary, "analyze"}}) {
        if (!fs::exists(path)) {
            log(fmt::format("fatal: {} outputs missing; run the {} stage first", stage, stage));
            return ExitCode::FatalIo;
        }
    }
    try {
        std::string text = "== ingest ==\n";
        std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // ok, failed
        for (auto const& row : parse_csv(read_file(manifest.string())).rows) {
            auto& c = counts[row[0]];
            (row[2] == "ok" ? c.first : c.second) += 1;
        }
        for (auto const& [cat, c] : counts) text += fmt::format("{}: {} ok, {} failed\n", cat, c.first, c.second);

        text += "== flatten ==\n";
        double worst = 0.0;
        std::size_t n = 0;
        for (auto const& row : parse_csv(read_file(conservation.string())).rows) {
            worst = std::max(worst, parse_number(row[3]));
            ++n;
        }
        text += fmt::format("tariffs flattened: {}\nworst conservation error: {:.3e}\n", n, worst);
        text += "== analyze ==\n" + read_file(summary.string());
        write_file((cfg.out_dir / "report.txt").string(), text);
        if (report != nullptr) *report = text;
    } catch (std::exception const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return ExitCode::FatalIo;
    }
    return ExitCode::Success;
}

}  // namespace gridalign
