#include "gridalign/calendar.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace gridalign {

namespace chr = std::chrono;

namespace {

chr::sys_days to_sys_days(int year, int month, int day) {
    return chr::sys_days{chr::year{year} / chr::month{static_cast<unsigned>(month)} /
                         chr::day{static_cast<unsigned>(day)}};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument(fmt::format("malformed timestamp '{}'", whole));
    }
    return value;
}

}  // namespace

std::int64_t to_epoch_hours(DateHour const& t) {
    auto days = to_sys_days(t.year, t.month, t.day).time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 24 + t.hour;
}

DateHour from_epoch_hours(std::int64_t hours) {
    std::int64_t days = floor_div(hours, 24);
    int hour = static_cast<int>(hours - days * 24);
    chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
    return DateHour{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                    static_cast<int>(static_cast<unsigned>(ymd.day())), hour};
}

int weekday_index(DateHour const& t) {
    chr::weekday wd{to_sys_days(t.year, t.month, t.day)};
    return static_cast<int>(wd.iso_encoding()) - 1;
}

bool is_weekend(DateHour const& t) { return weekday_index(t) >= 5; }

int days_in_month(int year, int month) {
    auto last = chr::year{year} / chr::month{static_cast<unsigned>(month)} / chr::last;
    return static_cast<int>(static_cast<unsigned>(last.day()));
}

int hours_in_year(int year) { return chr::year{year}.is_leap() ? 8784 : 8760; }

bool is_valid(DateHour const& t) {
    if (t.month < 1 || t.month > 12 || t.hour < 0 || t.hour > 23 || t.day < 1) {
        return false;
    }
    return t.day <= days_in_month(t.year, t.month);
}

std::string format_timestamp(DateHour const& t) {
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00", t.year, t.month, t.day, t.hour);
}

std::string format_date(DateHour const& t) {
    return fmt::format("{:04d}-{:02d}-{:02d}", t.year, t.month, t.day);
}

EpochMinutes parse_timestamp_minutes(std::string_view text) {
    // YYYY-MM-DD[( |T)HH:MM[:SS]]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument(fmt::format("malformed timestamp '{}'", text));
    }
    int year = parse_int(text.substr(0, 4), text);
    int month = parse_int(text.substr(5, 2), text);
    int day = parse_int(text.substr(8, 2), text);
    int hour = 0;
    int minute = 0;
    if (text.size() > 10) {
        if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') {
            throw std::invalid_argument(fmt::format("malformed timestamp '{}'", text));
        }
        hour = parse_int(text.substr(11, 2), text);
        minute = parse_int(text.substr(14, 2), text);
        if (text.size() > 16) {
            if (text[16] != ':' || text.size() != 19) {
                throw std::invalid_argument(fmt::format("malformed timestamp '{}'", text));
            }
            int second = parse_int(text.substr(17, 2), text);
            if (second != 0) {
                throw std::invalid_argument(fmt::format("timestamp '{}' is not minute-aligned", text));
            }
        }
    }
    DateHour t{year, month, day, hour};
    if (!is_valid(t) || minute < 0 || minute > 59) {
        throw std::invalid_argument(fmt::format("invalid calendar value in '{}'", text));
    }
    return to_epoch_hours(t) * 60 + minute;
}

DateHour parse_timestamp_hour(std::string_view text) {
    EpochMinutes m = parse_timestamp_minutes(text);
    if (m % 60 != 0) {
        throw std::invalid_argument(fmt::format("timestamp '{}' is not hour-aligned", text));
    }
    return from_epoch_hours(m / 60);
}

}  // namespace gridalign
