#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace gridalign {

/// A naive local-standard-time calendar hour. No DST: every day has 24 hours.
struct DateHour {
    int year = 2000;
    int month = 1;  // 1-12
    int day = 1;    // 1-31
    int hour = 0;   // 0-23

    friend bool operator==(DateHour const&, DateHour const&) = default;
    friend auto operator<=>(DateHour const&, DateHour const&) = default;
};

/// Hours since 1970-01-01T00:00.
std::int64_t to_epoch_hours(DateHour const& t);
DateHour from_epoch_hours(std::int64_t hours);

inline DateHour add_hours(DateHour const& t, std::int64_t n) {
    return from_epoch_hours(to_epoch_hours(t) + n);
}

/// 0 = Monday ... 6 = Sunday.
int weekday_index(DateHour const& t);
bool is_weekend(DateHour const& t);
int days_in_month(int year, int month);
int hours_in_year(int year);

bool is_valid(DateHour const& t);

/// Writes `YYYY-MM-DDTHH:00`.
std::string format_timestamp(DateHour const& t);
/// Writes `YYYY-MM-DD`.
std::string format_date(DateHour const& t);

/// Minutes since epoch; used for sub-hourly inputs.
using EpochMinutes = std::int64_t;

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DD HH:MM[:SS]` and `YYYY-MM-DDTHH:MM[:SS]`.
/// Throws std::invalid_argument on malformed text.
EpochMinutes parse_timestamp_minutes(std::string_view text);
DateHour parse_timestamp_hour(std::string_view text);

}  // namespace gridalign
