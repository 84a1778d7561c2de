#include "sbk/timeutil.hpp"

#include <cctype>
#include <cstdio>

namespace sbk {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

int days_in_month(int y, int m) {
    static const int base[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return base[m - 1];
}

}  // namespace

Timestamp make_time(int year, int month, int day, int hour, int minute, int second) {
    return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

Timestamp parse_iso8601(std::string_view text) {
    // minimal shape: 2023-05-01T09:12:00 -> 19 chars
    int y, mo, d, h, mi, s;
    if (text.size() < 19 || !read_int(text, 0, 4, y) || text[4] != '-' ||
        !read_int(text, 5, 2, mo) || text[7] != '-' || !read_int(text, 8, 2, d) ||
        (text[10] != 'T' && text[10] != ' ') || !read_int(text, 11, 2, h) ||
        text[13] != ':' || !read_int(text, 14, 2, mi) || text[16] != ':' ||
        !read_int(text, 17, 2, s)) {
        throw TimeParseError("malformed timestamp: '" + std::string(text) + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 || s > 60) {
        throw TimeParseError("timestamp field out of range: '" + std::string(text) + "'");
    }
    Timestamp t = make_time(y, mo, d, h, mi, s);

    std::string_view rest = text.substr(19);
    if (rest.empty()) return t;
    if (rest == "Z") return t;
    if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
        int oh, om;
        if (read_int(rest, 1, 2, oh) && read_int(rest, 4, 2, om) && oh <= 14 && om <= 59) {
            int offset = oh * 3600 + om * 60;
            return rest[0] == '+' ? t - offset : t + offset;
        }
    }
    throw TimeParseError("malformed timestamp offset: '" + std::string(text) + "'");
}

std::string format_iso8601(Timestamp t) {
    std::int64_t days = t / 86400;
    std::int64_t sod = t % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60),
                  static_cast<int>(sod % 60));
    return buf;
}

double hour_of_day(Timestamp t, int utc_offset_seconds) {
    std::int64_t sod = (t + utc_offset_seconds) % 86400;
    if (sod < 0) sod += 86400;
    return static_cast<double>(sod) / 3600.0;
}

}  // namespace sbk
