#include "gridalign/idropp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include <fmt/format.h>

#include "gridalign/calendar.hpp"
#include "gridalign/csv.hpp"

namespace gridalign {

std::array<ParameterInfo, kProgramFieldCount> const& program_schema() {
    static std::array<ParameterInfo, kProgramFieldCount> const schema = {{
        {"Min event days", "min_days", "Fewest event days per month"},
        {"Max event days", "max_days", "Most event days per month"},
        {"Min event duration", "min_dur", "Shortest allowed event, hours"},
        {"Max event duration", "max_dur", "Longest allowed event, hours"},
        {"Program start time", "start_time", "Daily start of the callable window"},
        {"Program end time", "end_time", "Daily end of the callable window"},
        {"Max events", "max_events", "Event cap per season"},
        {"Max event hours", "max_hours", "Cap on total event hours per year"},
        {"Events per day", "events_daily", "Event cap per day"},
        {"Max consecutive days", "max_consec", "Cap on back-to-back event days in a month"},
        {"Notification type", "notif_type", "Day-ahead or same-day notice"},
        {"Notification time", "notif_time", "Clock time of the notice"},
        {"Notification lead", "notif_delt", "Hours between notice and event start"},
        {"Baseline method", "base_method", "How reference consumption is estimated"},
        {"Historic data", "hist_pres", "Whether historic event data exists"},
        {"Payment function", "pay_function", "How reductions or availability are compensated"},
        {"DOE region", "region", "West, Southeast and Midwest, or Northeast"},
        {"Days of week", "dow", "Weekdays on which events may occur"},
        {"Season", "season", "Summer, winter, or both"},
        {"Eligibility", "elig", "Participation requirements"},
        {"Company", "comp", "Offering company or companies"},
        {"Season start month", "sm", "First month of the event season"},
        {"Season end month", "em", "Last month of the event season"},
        {"State", "state", "State where the program is offered"},
        {"Utility", "util", "Eligible utilities"},
        {"Trigger", "trigger", "What causes an event"},
        {"Load type", "load", "Kinds of load that may enroll"},
        {"Program or rate", "program_rate", "DOE classification as program or rate"},
        {"Settlement function", "function_base", "Post-event payment calculation"},
        {"Delivered ratio", "delivered_ratio", "Reduction over nominated reduction"},
        {"Amount reduced", "amount_reduced", "Baseline less metered consumption"},
        {"Weekends in baseline", "weekends", "Whether baseline days may fall on weekends"},
        {"Holidays in baseline", "holidays", "Whether baseline days may be holidays"},
        {"Prior events in baseline", "prev_events", "Whether earlier event days count as baseline days"},
        {"Baseline hours", "base_hours", "Hours of day sampled for the baseline"},
        {"Baseline range", "range_val", "Count of measurements in the baseline window"},
        {"Baseline resolution", "range_res", "Measurement frequency of the baseline window"},
        {"Baseline dates", "base_dates", "Dates eligible for baseline measurements"},
        {"Baseline aggregation", "function", "Aggregate applied across baseline measurements"},
        {"Firm service level", "firm_level", "Load level to curtail to instead of a baseline"},
    }};
    return schema;
}

std::string_view column_id(ProgramField f) { return program_schema()[static_cast<std::size_t>(f)].column_id; }

std::optional<ProgramField> parse_column_id(std::string_view id) {
    auto const& schema = program_schema();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].column_id == id) return static_cast<ProgramField>(i);
    }
    return std::nullopt;
}

std::optional<double> IbdrProgram::number(ProgramField f) const {
    auto const& v = get(f);
    if (!v) return std::nullopt;
    try {
        return parse_number(*v);
    } catch (std::invalid_argument const&) {
        throw ProgramError(fmt::format("field '{}' is not numeric: '{}'", column_id(f), *v));
    }
}

std::optional<bool> IbdrProgram::flag(ProgramField f) const {
    auto const& v = get(f);
    if (!v) return std::nullopt;
    auto t = to_lower(trim(*v));
    if (t == "yes" || t == "y" || t == "true" || t == "1" || t == "included" || t == "include") return true;
    if (t == "no" || t == "n" || t == "false" || t == "0" || t == "excluded" || t == "exclude") return false;
    return std::nullopt;
}

std::size_t IbdrProgram::populated_count() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](auto const& v) { return v.has_value(); }));
}

namespace {

bool is_missing_text(std::string_view v) {
    v = trim(v);
    return v.empty() || to_lower(v) == kMissingMarker;
}

}  // namespace

std::vector<IbdrProgram> parse_programs(std::string_view text) {
    CsvTable table = parse_csv(text);
    auto const& schema = program_schema();
    std::array<std::size_t, kProgramFieldCount> idx{};
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        auto c = table.column(schema[i].column_id);
        if (!c) {
            missing.push_back(schema[i].column_id);
        } else {
            idx[i] = *c;
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (auto const& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ProgramError(fmt::format("program table is missing required columns: {}", list));
    }
    std::vector<std::size_t> extra_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (!parse_column_id(table.header[c])) extra_cols.push_back(c);
    }

    std::vector<IbdrProgram> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        IbdrProgram p;
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (idx[i] >= row.size()) {
                throw ParseError(table.line_numbers[r], schema[i].column_id, "row has too few fields");
            }
            auto const& v = row[idx[i]];
            if (!is_missing_text(v)) p.set(static_cast<ProgramField>(i), std::string(trim(v)));
        }
        for (auto c : extra_cols) {
            p.extras.emplace_back(table.header[c], c < row.size() ? row[c] : std::string{});
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::string serialize_programs(std::vector<IbdrProgram> const& programs) {
    std::vector<std::string> extra_names;
    for (auto const& p : programs) {
        for (auto const& [k, v] : p.extras) {
            if (std::find(extra_names.begin(), extra_names.end(), k) == extra_names.end()) extra_names.push_back(k);
        }
    }
    std::vector<std::string> header;
    for (auto const& s : program_schema()) header.push_back(s.column_id);
    header.insert(header.end(), extra_names.begin(), extra_names.end());
    std::string out = csv_join(header) + "\n";
    for (auto const& p : programs) {
        std::vector<std::string> fields;
        for (std::size_t i = 0; i < kProgramFieldCount; ++i) {
            auto const& v = p.get(static_cast<ProgramField>(i));
            fields.push_back(v ? *v : std::string(kMissingMarker));
        }
        for (auto const& name : extra_names) {
            auto it = std::find_if(p.extras.begin(), p.extras.end(), [&](auto const& kv) { return kv.first == name; });
            fields.push_back(it == p.extras.end() ? std::string{} : it->second);
        }
        out += csv_join(fields) + "\n";
    }
    return out;
}

std::vector<ParameterInfo> parse_parameter_metadata(std::string_view text) {
    CsvTable table = parse_csv(text);
    auto name = table.column("column_name");
    auto id = table.column("column_id");
    auto desc = table.column("description");
    if (!name || !id || !desc) {
        throw ProgramError("parameter metadata header must contain column_name,column_id,description");
    }
    std::vector<ParameterInfo> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        if (std::max({*name, *id, *desc}) >= row.size()) {
            throw ParseError(table.line_numbers[r], "", "row has too few fields");
        }
        out.push_back(ParameterInfo{row[*name], row[*id], row[*desc]});
    }
    return out;
}

std::string serialize_parameter_metadata(std::span<ParameterInfo const> params) {
    std::string out = "column_name,column_id,description\n";
    for (auto const& p : params) {
        out += csv_join({p.column_name, p.column_id, p.description}) + "\n";
    }
    return out;
}

std::vector<std::string> validate_program(IbdrProgram const& p) {
    std::vector<std::string> out;
    auto numeric = [&](ProgramField f) -> std::optional<double> {
        try {
            return p.number(f);
        } catch (ProgramError const& e) {
            out.push_back(e.what());
            return std::nullopt;
        }
    };
    auto min_dur = numeric(ProgramField::MinDur);
    auto max_dur = numeric(ProgramField::MaxDur);
    if (min_dur && *min_dur < 0.0) out.push_back("min_dur must be non-negative");
    if (max_dur && *max_dur < 0.0) out.push_back("max_dur must be non-negative");
    if (min_dur && max_dur && *min_dur > *max_dur) out.push_back("min_dur must not exceed max_dur");
    if (auto rv = numeric(ProgramField::RangeVal)) {
        if (!(*rv >= 1.0) || std::floor(*rv) != *rv) out.push_back("range_val must be a positive integer");
    }
    if (auto fl = numeric(ProgramField::FirmLevel); fl && *fl < 0.0) {
        out.push_back("firm_level must be non-negative");
    }
    if (auto const& pay = p.get(ProgramField::PayFunction)) {
        if (auto rate = parse_payment_rate(*pay); rate && rate->value < 0.0) {
            out.push_back("payment rate must be non-negative");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

Aggregation baseline_aggregation(IbdrProgram const& p) {
    auto const& f = p.get(ProgramField::Function);
    if (!f) return Aggregation::Mean;
    auto t = to_lower(trim(*f));
    if (t == "mean" || t == "average" || t == "avg") return Aggregation::Mean;
    if (t == "max" || t == "maximum") return Aggregation::Max;
    if (t == "median") return Aggregation::Median;
    throw UnsupportedMethod(fmt::format("baseline function '{}' is not supported (mean, max, median)", *f));
}

std::vector<int> baseline_hours(IbdrProgram const& p) {
    auto const& text = p.get(ProgramField::BaseHours);
    std::vector<int> hours;
    if (!text) {
        for (int h = 0; h < 24; ++h) hours.push_back(h);
        return hours;
    }
    auto hour_of = [&](std::string_view s) {
        s = trim(s);
        if (auto colon = s.find(':'); colon != std::string_view::npos) s = s.substr(0, colon);
        try {
            auto v = parse_integer(s);
            if (v < 0 || v > 24) throw std::invalid_argument("out of range");
            return static_cast<int>(v);
        } catch (std::invalid_argument const&) {
            throw ProgramError(fmt::format("unreadable base_hours '{}'", *text));
        }
    };
    std::array<bool, 24> on{};
    std::string_view rest = *text;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        auto part = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (auto dash = part.find('-'); dash != std::string_view::npos) {
            int a = hour_of(part.substr(0, dash));
            int b = hour_of(part.substr(dash + 1));
            if (a >= b) throw ProgramError(fmt::format("empty base_hours range in '{}'", *text));
            for (int h = a; h < b; ++h) on[static_cast<std::size_t>(h)] = true;
        } else {
            int h = hour_of(part);
            if (h > 23) throw ProgramError(fmt::format("unreadable base_hours '{}'", *text));
            on[static_cast<std::size_t>(h)] = true;
        }
    }
    for (int h = 0; h < 24; ++h) {
        if (on[static_cast<std::size_t>(h)]) hours.push_back(h);
    }
    return hours;
}

Baseline compute_baseline(IbdrProgram const& p, std::span<DayLoad const> history, Date event_date,
                          std::set<Date> const& holidays) {
    Baseline out;
    out.hours = baseline_hours(p);

    if (auto firm = p.number(ProgramField::FirmLevel)) {
        out.from_firm_level = true;
        out.kw.assign(out.hours.size(), *firm);
        return out;
    }

    auto agg = baseline_aggregation(p);
    auto range = p.number(ProgramField::RangeVal);
    if (!range) {
        throw BaselineInfeasible("program has neither range_val nor firm_level");
    }
    if (!(*range >= 1.0) || std::floor(*range) != *range) {
        throw ProgramError("range_val must be a positive integer");
    }
    auto needed = static_cast<std::size_t>(*range);

    bool keep_weekends = p.flag(ProgramField::Weekends).value_or(true);
    bool keep_holidays = p.flag(ProgramField::Holidays).value_or(true);
    bool keep_events = p.flag(ProgramField::PrevEvents).value_or(true);

    std::vector<DayLoad const*> eligible;
    for (auto const& d : history) {
        if (!(d.date < event_date)) continue;
        if (!keep_weekends && is_weekend(DateHour{d.date.year, d.date.month, d.date.day, 0})) continue;
        if (!keep_holidays && holidays.contains(d.date)) continue;
        if (!keep_events && d.event_day) continue;
        eligible.push_back(&d);
    }
    if (eligible.size() < needed) {
        throw BaselineInfeasible(
            fmt::format("{} eligible day(s) before the event, program needs {}", eligible.size(), needed));
    }
    std::stable_sort(eligible.begin(), eligible.end(), [](auto* a, auto* b) { return a->date > b->date; });
    eligible.resize(needed);
    for (auto const* d : eligible) out.days_used.push_back(d->date);

    std::vector<double> column(needed);
    for (int h : out.hours) {
        for (std::size_t i = 0; i < needed; ++i) column[i] = eligible[i]->kw[static_cast<std::size_t>(h)];
        double v = 0.0;
        switch (agg) {
            case Aggregation::Mean: {
                for (double x : column) v += x;
                v /= static_cast<double>(needed);
                break;
            }
            case Aggregation::Max:
                v = *std::max_element(column.begin(), column.end());
                break;
            case Aggregation::Median: {
                std::vector<double> sorted = column;
                std::sort(sorted.begin(), sorted.end());
                std::size_t mid = needed / 2;
                v = needed % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
                break;
            }
        }
        out.kw.push_back(v);
    }
    return out;
}

DurationBounds duration_bounds(IbdrProgram const& p) {
    auto min_dur = p.number(ProgramField::MinDur);
    auto max_dur = p.number(ProgramField::MaxDur);
    DurationBounds b;
    if (min_dur && max_dur) {
        b = {*min_dur, *max_dur};
    } else if (min_dur) {
        b = {*min_dur, std::max(kDefaultMaxDurationHours, *min_dur)};
    } else if (max_dur) {
        b = {std::min(kDefaultMinDurationHours, *max_dur), *max_dur};
    } else {
        b = {kDefaultMinDurationHours, kDefaultMaxDurationHours};
    }
    if (b.min_hours > b.max_hours) {
        throw ProgramError(fmt::format("declared min_dur {} exceeds max_dur {}", b.min_hours, b.max_hours));
    }
    return b;
}

PaymentResult compute_payment(IbdrProgram const& p, std::span<double const> baseline_kw,
                              std::span<double const> metered_kw, double nomination_kw, double rate,
                              RateBasis basis) {
    if (baseline_kw.size() != metered_kw.size()) {
        throw ProgramError(fmt::format("baseline covers {} hours but metering covers {}", baseline_kw.size(),
                                       metered_kw.size()));
    }
    if (rate < 0.0) {
        throw ProgramError("payment rate must be non-negative");
    }
    if (basis == RateBasis::PerKw && !(nomination_kw > 0.0)) {
        throw ProgramError("a per-kW payment needs a positive nomination");
    }
    auto bounds = duration_bounds(p);
    auto duration = static_cast<double>(metered_kw.size());
    if (duration < bounds.min_hours || duration > bounds.max_hours) {
        throw ProgramError(fmt::format("event of {} h is outside the allowed [{}, {}] h", duration,
                                       bounds.min_hours, bounds.max_hours));
    }

    PaymentResult out;
    double total_reduced = 0.0;
    double credited = 0.0;
    for (std::size_t t = 0; t < metered_kw.size(); ++t) {
        double reduced = std::max(baseline_kw[t] - metered_kw[t], 0.0);
        out.amount_reduced.push_back(reduced);
        total_reduced += reduced;
        credited += basis == RateBasis::PerKw ? std::min(reduced, nomination_kw) : reduced;
    }
    out.payment = rate * credited;  // per-kWh credit uses 1 h steps
    if (nomination_kw > 0.0) {
        out.delivered_ratio = total_reduced / (nomination_kw * duration);
    }
    return out;
}

double equivalent_hours(double payment_usd_per_kw, double reference_usd_per_kwh) {
    if (!(reference_usd_per_kwh > 0.0)) {
        throw std::invalid_argument("reference price must be positive");
    }
    return payment_usd_per_kw / reference_usd_per_kwh;
}

std::optional<PaymentRate> parse_payment_rate(std::string_view text) {
    static std::regex const pattern(R"((-?\d+(?:\.\d+)?)\s*(?:\$|usd)?\s*(?:/|per)\s*(mwh|kwh|kw-month|kw-mo|kw))",
                                    std::regex::icase);
    std::string s(text);
    std::smatch m;
    if (!std::regex_search(s, m, pattern)) return std::nullopt;
    double value = parse_number(m[1].str());
    auto unit = to_lower(m[2].str());
    if (unit == "mwh") return PaymentRate{value / 1000.0, RateBasis::PerKwh};
    if (unit == "kwh") return PaymentRate{value, RateBasis::PerKwh};
    return PaymentRate{value, RateBasis::PerKw};
}

}  // namespace gridalign
