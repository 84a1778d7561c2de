#pragma once

// Second-precision UTC timestamps. ISO-8601 in, ISO-8601 out.
// The building is assumed to run on one fixed offset; hour-of-day helpers
// take an optional offset so tables can be built in wall-clock time.

#include <cstdint>
#include <string>
#include <string_view>

#include "sbk/errors.hpp"

namespace sbk {

using Timestamp = std::int64_t;  // seconds since the Unix epoch

class TimeParseError : public ParseError {
public:
    explicit TimeParseError(const std::string& msg, int line = 1) : ParseError(msg, line) {}
};

// "YYYY-MM-DDThh:mm:ss" followed by "Z", "+hh:mm", "-hh:mm" or nothing
// (bare timestamps are read as UTC). Throws TimeParseError.
Timestamp parse_iso8601(std::string_view text);

// Always renders UTC with a trailing Z.
std::string format_iso8601(Timestamp t);

Timestamp make_time(int year, int month, int day, int hour, int minute, int second);

// Fractional hour of day in [0, 24).
double hour_of_day(Timestamp t, int utc_offset_seconds = 0);

}  // namespace sbk
