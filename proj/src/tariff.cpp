#include "gridalign/tariff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "gridalign/csv.hpp"

namespace gridalign {

std::string_view to_string(ChargeKind kind) {
    switch (kind) {
        case ChargeKind::Energy: return "energy";
        case ChargeKind::Demand: return "demand";
        case ChargeKind::Customer: return "customer";
    }
    return "?";
}

std::string_view to_string(Assessment a) { return a == Assessment::Monthly ? "monthly" : "daily"; }

std::string_view to_string(Bundling b) { return b == Bundling::Bundled ? "bundled" : "delivery_only"; }

ChargeKind parse_charge_kind(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "energy") return ChargeKind::Energy;
    if (t == "demand") return ChargeKind::Demand;
    if (t == "customer") return ChargeKind::Customer;
    throw std::invalid_argument(fmt::format("unknown charge kind '{}'", text));
}

Assessment parse_assessment(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "monthly" || t.empty()) return Assessment::Monthly;
    if (t == "daily") return Assessment::Daily;
    throw std::invalid_argument(fmt::format("unknown assessment '{}'", text));
}

Bundling parse_bundling(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "bundled") return Bundling::Bundled;
    if (t == "delivery_only") return Bundling::DeliveryOnly;
    throw std::invalid_argument(fmt::format("unknown bundling '{}'", text));
}

bool ChargeItem::is_active(int month, int weekday, int hour) const {
    if (kind == ChargeKind::Customer) {
        return true;
    }
    return in_month(month) && hour >= hour_start && hour < hour_end && weekday >= weekday_start &&
           weekday <= weekday_end;
}

bool ChargeItem::is_active(DateHour const& t) const { return is_active(t.month, weekday_index(t), t.hour); }

std::string describe(Violation const& v) {
    return fmt::format("item {}: {}: {}", v.item_index, v.field, v.rule);
}

namespace {

std::string join_violations(std::vector<Violation> const& vs) {
    std::string out = "tariff schedule is invalid";
    for (auto const& v : vs) {
        out += "; " + describe(v);
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate_schedule(TariffSchedule const& s) {
    std::vector<Violation> out;
    // Last floor seen per (kind, family), for tier monotonicity in file order.
    std::map<std::pair<ChargeKind, std::string>, double> last_floor;

    for (std::size_t i = 0; i < s.items.size(); ++i) {
        auto const& it = s.items[i];
        auto add = [&](std::string field, std::string rule) {
            out.push_back(Violation{i, std::move(field), std::move(rule)});
        };
        if (!std::isfinite(it.rate) || it.rate < 0.0) {
            add("rate", "rate must be finite and non-negative");
        }
        if (it.month_start < 1 || it.month_start > 12) add("month_start", "month must be in 1..12");
        if (it.month_end < 1 || it.month_end > 12) add("month_end", "month must be in 1..12");
        if (it.month_start > it.month_end) add("month_start", "month_start must not exceed month_end");
        if (it.weekday_start < 0 || it.weekday_start > 6) add("weekday_start", "weekday must be in 0..6");
        if (it.weekday_end < 0 || it.weekday_end > 6) add("weekday_end", "weekday must be in 0..6");
        if (it.weekday_start > it.weekday_end) {
            add("weekday_start", "weekday_start must not exceed weekday_end");
        }
        if (it.hour_start < 0 || it.hour_start > 23) add("hour_start", "hour_start must be in 0..23");
        if (it.hour_end < 1 || it.hour_end > 24) add("hour_end", "hour_end must be in 1..24");
        if (it.hour_start >= it.hour_end) add("hour_start", "hour_start must be less than hour_end");

        auto key = std::make_pair(it.kind, it.charge_family);
        auto found = last_floor.find(key);
        if (!std::isfinite(it.tier_floor)) {
            add("tier_floor", "tier_floor must be finite");
        } else if (found == last_floor.end()) {
            if (it.tier_floor != 0.0) {
                add("tier_floor", "first tier of a charge family must start at 0");
            }
            last_floor.emplace(key, it.tier_floor);
        } else {
            if (!(it.tier_floor > found->second)) {
                add("tier_floor", "tier floors within a charge family must be strictly increasing");
            } else {
                found->second = it.tier_floor;
            }
        }
    }
    return out;
}

double tier_ceiling(TariffSchedule const& s, std::size_t item_index) {
    auto const& item = s.items.at(item_index);
    double ceiling = std::numeric_limits<double>::infinity();
    for (auto const& other : s.items) {
        if (other.kind == item.kind && other.charge_family == item.charge_family &&
            other.tier_floor > item.tier_floor && other.tier_floor < ceiling) {
            ceiling = other.tier_floor;
        }
    }
    return ceiling;
}

namespace {

constexpr std::array<std::string_view, 11> kTariffColumns = {
    "kind",          "charge_family", "rate",       "tier_floor", "month_start", "month_end",
    "weekday_start", "weekday_end",   "hour_start", "hour_end",   "assessed"};

}  // namespace

TariffSchedule parse_tariff(std::string_view text, std::string tariff_id, Bundling bundling,
                            std::vector<std::string>* warnings) {
    CsvTable table = parse_csv(text);
    std::array<std::size_t, kTariffColumns.size()> idx{};
    for (std::size_t c = 0; c < kTariffColumns.size(); ++c) {
        auto found = table.column(kTariffColumns[c]);
        if (!found) {
            throw ParseError(1, std::string(kTariffColumns[c]), "required column missing from header");
        }
        idx[c] = *found;
    }
    if (warnings != nullptr) {
        for (auto const& h : table.header) {
            if (std::find(kTariffColumns.begin(), kTariffColumns.end(), h) == kTariffColumns.end()) {
                warnings->push_back(fmt::format("{}: ignoring unknown column '{}'", tariff_id, h));
            }
        }
    }

    TariffSchedule schedule{std::move(tariff_id), {}, bundling};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        if (row.size() > table.header.size()) {
            throw ParseError(line, table.header.empty() ? std::string{} : table.header.back(),
                             fmt::format("row has {} fields but the header has {}", row.size(), table.header.size()));
        }
        auto cell = [&](std::size_t c) -> std::string_view {
            if (idx[c] >= row.size()) {
                throw ParseError(line, std::string(kTariffColumns[c]), "row has too few fields");
            }
            return trim(row[idx[c]]);
        };
        auto guarded = [&](std::size_t c, auto&& fn) {
            try {
                return fn(cell(c));
            } catch (std::invalid_argument const& e) {
                throw ParseError(line, std::string(kTariffColumns[c]), e.what());
            }
        };
        auto as_int = [&](std::size_t c) {
            return guarded(c, [](std::string_view v) { return static_cast<int>(parse_integer(v)); });
        };
        ChargeItem item;
        item.kind = guarded(0, [](std::string_view v) { return parse_charge_kind(v); });
        item.charge_family = std::string(cell(1));
        item.rate = guarded(2, [](std::string_view v) { return parse_number(v); });
        item.tier_floor = guarded(3, [](std::string_view v) { return v.empty() ? 0.0 : parse_number(v); });
        item.month_start = as_int(4);
        item.month_end = as_int(5);
        item.weekday_start = as_int(6);
        item.weekday_end = as_int(7);
        item.hour_start = as_int(8);
        item.hour_end = as_int(9);
        item.assessed = guarded(10, [](std::string_view v) { return parse_assessment(v); });
        schedule.items.push_back(std::move(item));
    }

    auto violations = validate_schedule(schedule);
    if (!violations.empty()) {
        throw ValidationError(std::move(violations));
    }
    return schedule;
}

std::string serialize_tariff(TariffSchedule const& s) {
    std::string out(kTariffHeader);
    out.push_back('\n');
    for (auto const& it : s.items) {
        out += csv_join({std::string(to_string(it.kind)), it.charge_family, format_number(it.rate),
                         format_number(it.tier_floor), std::to_string(it.month_start),
                         std::to_string(it.month_end), std::to_string(it.weekday_start),
                         std::to_string(it.weekday_end), std::to_string(it.hour_start),
                         std::to_string(it.hour_end), std::string(to_string(it.assessed))});
        out.push_back('\n');
    }
    return out;
}

std::optional<TariffFileName> parse_tariff_filename(std::string_view filename) {
    if (!filename.ends_with(".csv")) {
        return std::nullopt;
    }
    filename.remove_suffix(4);
    for (auto [suffix, bundling] : {std::pair{std::string_view{"_delivery_only"}, Bundling::DeliveryOnly},
                                    std::pair{std::string_view{"_bundled"}, Bundling::Bundled}}) {
        if (filename.size() > suffix.size() && filename.ends_with(suffix)) {
            filename.remove_suffix(suffix.size());
            return TariffFileName{std::string(filename), bundling};
        }
    }
    return std::nullopt;
}

std::string tariff_filename(std::string_view tariff_id, Bundling bundling) {
    return fmt::format("{}_{}.csv", tariff_id, to_string(bundling));
}

TariffSchedule load_tariff_file(std::string const& path, std::vector<std::string>* warnings) {
    auto name = std::filesystem::path(path).filename().string();
    auto parsed = parse_tariff_filename(name);
    if (!parsed) {
        throw std::invalid_argument(
            fmt::format("'{}' does not follow <tariff_id>_<bundled|delivery_only>.csv", name));
    }
    return parse_tariff(read_file(path), parsed->tariff_id, parsed->bundling, warnings);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Sector s) {
    switch (s) {
        case Sector::Industrial: return "industrial";
        case Sector::Commercial: return "commercial";
        case Sector::Residential: return "residential";
        case Sector::Other: return "other";
    }
    return "other";
}

Sector parse_sector(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "industrial") return Sector::Industrial;
    if (t == "commercial") return Sector::Commercial;
    if (t == "residential") return Sector::Residential;
    return Sector::Other;
}

std::vector<TariffMetadata> parse_metadata(std::string_view text, std::vector<std::string>* warnings) {
    CsvTable table = parse_csv(text);
    static constexpr std::array<std::string_view, 9> required = {
        "tariff_id", "utility_name", "eia_id", "zip", "latitude", "longitude", "sector", "service_type", "iso_label"};
    static constexpr std::array<std::string_view, 4> optional_cols = {"start_date", "end_date", "min_peak_kw",
                                                                      "max_peak_kw"};
    std::array<std::size_t, required.size()> idx{};
    for (std::size_t c = 0; c < required.size(); ++c) {
        auto found = table.column(required[c]);
        if (!found) {
            throw ParseError(1, std::string(required[c]), "required column missing from header");
        }
        idx[c] = *found;
    }
    std::array<std::optional<std::size_t>, optional_cols.size()> opt_idx{};
    for (std::size_t c = 0; c < optional_cols.size(); ++c) {
        opt_idx[c] = table.column(optional_cols[c]);
    }
    if (warnings != nullptr) {
        for (auto const& h : table.header) {
            if (std::find(required.begin(), required.end(), h) == required.end() &&
                std::find(optional_cols.begin(), optional_cols.end(), h) == optional_cols.end()) {
                warnings->push_back(fmt::format("metadata: ignoring unknown column '{}'", h));
            }
        }
    }

    std::vector<TariffMetadata> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        auto get = [&](std::size_t col, std::string_view name) -> std::string_view {
            if (col >= row.size()) {
                throw ParseError(line, std::string(name), "row has too few fields");
            }
            return trim(row[col]);
        };
        auto field = [&](std::size_t c) { return get(idx[c], required[c]); };
        auto opt_number = [&](std::string_view v, std::string_view name) -> std::optional<double> {
            if (v.empty()) return std::nullopt;
            try {
                return parse_number(v);
            } catch (std::invalid_argument const& e) {
                throw ParseError(line, std::string(name), e.what());
            }
        };

        TariffMetadata m;
        m.tariff_id = std::string(field(0));
        if (m.tariff_id.empty()) {
            throw ParseError(line, "tariff_id", "empty tariff id");
        }
        if (!seen.insert(m.tariff_id).second) {
            throw ParseError(line, "tariff_id", fmt::format("duplicate tariff id '{}'", m.tariff_id));
        }
        m.utility_name = std::string(field(1));
        auto eia = field(2);
        if (!eia.empty()) {
            try {
                m.eia_id = parse_integer(eia);
            } catch (std::invalid_argument const& e) {
                throw ParseError(line, "eia_id", e.what());
            }
        }
        m.zip = std::string(field(3));
        m.latitude = opt_number(field(4), "latitude");
        m.longitude = opt_number(field(5), "longitude");
        if (m.latitude && (*m.latitude < -90.0 || *m.latitude > 90.0)) {
            throw ParseError(line, "latitude", "latitude must be in [-90, 90]");
        }
        if (m.longitude && (*m.longitude < -180.0 || *m.longitude > 180.0)) {
            throw ParseError(line, "longitude", "longitude must be in [-180, 180]");
        }
        m.sector = parse_sector(field(6));
        m.service_type = std::string(field(7));
        m.iso_label = std::string(field(8));
        auto opt_text = [&](std::size_t c) -> std::optional<std::string> {
            if (!opt_idx[c]) return std::nullopt;
            auto v = get(*opt_idx[c], optional_cols[c]);
            if (v.empty()) return std::nullopt;
            return std::string(v);
        };
        m.start_date = opt_text(0);
        m.end_date = opt_text(1);
        if (opt_idx[2]) m.min_peak_kw = opt_number(get(*opt_idx[2], optional_cols[2]), optional_cols[2]);
        if (opt_idx[3]) m.max_peak_kw = opt_number(get(*opt_idx[3], optional_cols[3]), optional_cols[3]);
        out.push_back(std::move(m));
    }
    return out;
}

std::string serialize_metadata(std::vector<TariffMetadata> const& rows) {
    bool extended = std::any_of(rows.begin(), rows.end(), [](auto const& m) {
        return m.start_date || m.end_date || m.min_peak_kw || m.max_peak_kw;
    });
    std::string out(kMetadataHeader);
    if (extended) {
        out += ",start_date,end_date,min_peak_kw,max_peak_kw";
    }
    out.push_back('\n');
    auto num = [](std::optional<double> v) { return v ? format_number(*v) : std::string{}; };
    for (auto const& m : rows) {
        std::vector<std::string> fields = {m.tariff_id,
                                           m.utility_name,
                                           std::to_string(m.eia_id),
                                           m.zip,
                                           num(m.latitude),
                                           num(m.longitude),
                                           std::string(to_string(m.sector)),
                                           m.service_type,
                                           m.iso_label};
        if (extended) {
            fields.push_back(m.start_date.value_or(""));
            fields.push_back(m.end_date.value_or(""));
            fields.push_back(num(m.min_peak_kw));
            fields.push_back(num(m.max_peak_kw));
        }
        out += csv_join(fields);
        out.push_back('\n');
    }
    return out;
}

FilterCriteria FilterCriteria::screening_defaults(int year) {
    FilterCriteria c;
    c.sectors = {Sector::Industrial, Sector::Commercial};
    c.service_types = {"bundled", "delivery with standard offer"};
    c.effective_on = fmt::format("{:04d}-01-01", year);
    c.reference_demand_kw = 1000.0;
    return c;
}

std::vector<TariffMetadata> filter_applicable(std::vector<TariffMetadata> const& rows,
                                              FilterCriteria const& criteria) {
    std::set<std::string> services;
    for (auto const& s : criteria.service_types) {
        services.insert(to_lower(s));
    }
    std::vector<TariffMetadata> out;
    for (auto const& m : rows) {
        if (!criteria.sectors.empty() && !criteria.sectors.contains(m.sector)) {
            continue;
        }
        if (!services.empty() && !services.contains(to_lower(m.service_type))) {
            continue;
        }
        if (criteria.effective_on) {
            // ISO dates compare lexicographically.
            if (m.start_date && !(*m.start_date < *criteria.effective_on)) continue;
            if (m.end_date && !(*m.end_date > *criteria.effective_on)) continue;
        }
        if (criteria.reference_demand_kw) {
            double ref = *criteria.reference_demand_kw;
            if (m.min_peak_kw && *m.min_peak_kw > ref) continue;
            if (m.max_peak_kw && *m.max_peak_kw < ref) continue;
        }
        out.push_back(m);
    }
    return out;
}

}  // namespace gridalign
