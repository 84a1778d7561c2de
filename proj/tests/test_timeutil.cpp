#include "sbk/timeutil.hpp"

#include <string>

#include "doctest.h"
#include "sbk/errors.hpp"
#include "testutil.hpp"

using namespace sbk;

TEST_CASE("known timestamps") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-02T00:00:00Z") == 86400);
    CHECK(parse_iso8601("2023-05-01T00:00:00Z") == 1682899200);
    CHECK(parse_iso8601("2023-05-01T09:30:15Z") == 1682899200 + 9 * 3600 + 30 * 60 + 15);
    // leap day
    CHECK(parse_iso8601("2024-02-29T12:00:00Z") == parse_iso8601("2024-02-28T12:00:00Z") + 86400);
    // pre-epoch
    CHECK(parse_iso8601("1969-12-31T23:59:59Z") == -1);
}

TEST_CASE("offset forms") {
    // bare timestamps are UTC
    CHECK(parse_iso8601("2023-05-01T00:00:00") == 1682899200);
    // space separator is tolerated (common in sensor exports)
    CHECK(parse_iso8601("2023-05-01 00:00:00Z") == 1682899200);
    // leap second parses
    CHECK(parse_iso8601("2023-06-30T23:59:60Z") == parse_iso8601("2023-06-30T23:59:59Z") + 1);
    // +09:00 wall clock is 9 hours ahead of the instant
    CHECK(parse_iso8601("2023-05-01T09:00:00+09:00") == 1682899200);
    CHECK(parse_iso8601("2023-04-30T19:30:00-04:30") == 1682899200);
}

TEST_CASE("make_time agrees with parse") {
    CHECK(make_time(2023, 5, 1, 0, 0, 0) == 1682899200);
    CHECK(make_time(1970, 1, 1, 0, 0, 0) == 0);
    CHECK(make_time(2000, 3, 1, 0, 0, 0) == parse_iso8601("2000-03-01T00:00:00Z"));
}

TEST_CASE("format round trip on random timestamps") {
    testutil::Rand rng(101);
    for (int i = 0; i < 5000; ++i) {
        // roughly 1905..2105
        auto ts = static_cast<Timestamp>(rng.next() % 6311520000ull) - 2051244000;
        std::string text = format_iso8601(ts);
        CHECK(parse_iso8601(text) == ts);
    }
    CHECK(format_iso8601(0) == "1970-01-01T00:00:00Z");
    CHECK(format_iso8601(1682899200) == "2023-05-01T00:00:00Z");
}

TEST_CASE("malformed timestamps throw") {
    for (const char* bad : {
             "",
             "2023-05-01",
             "2023-13-01T00:00:00Z",     // month 13
             "2023-00-01T00:00:00Z",     // month 0
             "2023-02-30T00:00:00Z",     // Feb 30
             "2023-05-01T24:00:00Z",     // hour 24
             "2023-05-01T00:60:00Z",     // minute 60
             "2023-05-01T00:00:61Z",     // second 61
             "20x3-05-01T00:00:00Z",     // junk digit
             "2023-05-01T00:00:00Zx",    // trailing junk
             "2023-05-01T00:00:00+9:00", // short offset
         }) {
        CHECK_THROWS_AS(parse_iso8601(bad), ParseError);
    }
}

TEST_CASE("hour_of_day is fractional wall-clock time") {
    CHECK(hour_of_day(0) == doctest::Approx(0.0));
    CHECK(hour_of_day(3600) == doctest::Approx(1.0));
    CHECK(hour_of_day(3600 + 1800) == doctest::Approx(1.5));
    CHECK(hour_of_day(86400) == doctest::Approx(0.0));
    CHECK(hour_of_day(86399) == doctest::Approx(23.0 + 3599.0 / 3600.0));
    // pre-epoch wraps into the previous day
    CHECK(hour_of_day(-1) == doctest::Approx(23.0 + 3599.0 / 3600.0));
    // offset shifts the local clock
    CHECK(hour_of_day(0, 9 * 3600) == doctest::Approx(9.0));
    CHECK(hour_of_day(0, -3600) == doctest::Approx(23.0));
    CHECK(hour_of_day(make_time(2023, 5, 1, 9, 59, 59)) == doctest::Approx(9.0 + 3599.0 / 3600.0));
}
