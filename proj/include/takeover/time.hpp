#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace takeover {

/// Seconds since the Unix epoch, UTC. All audit timestamps are kept at second
/// resolution.
using Instant = std::int64_t;
using Seconds = std::int64_t;

inline constexpr Seconds kHour = 3'600;
inline constexpr Seconds kDay = 86'400;
inline constexpr Seconds kWeek = 604'800;
// A "month" is a fixed 30-day span, never a calendar month.
inline constexpr Seconds kMonth = 30 * kDay;

/// Parses an ISO-8601 date-time with an explicit UTC offset ("Z", "+HH:MM",
/// "+HHMM" or "+HH"). Fractional seconds are accepted and truncated. Either
/// 'T' or a single space may separate date and time. Returns nullopt for
/// anything else, including a missing offset.
std::optional<Instant> parse_iso8601(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Instant t);

/// UTC calendar-hour bucket (date, hour) encoded as hours since the epoch.
constexpr std::int64_t hour_bucket(Instant t) {
  return t >= 0 ? t / kHour : -((-t + kHour - 1) / kHour);
}

/// Days between 1970-01-01 and the given proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d);

}  // namespace takeover
