#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace climoe::data {

// UTC instant with minute resolution.
struct Timestamp {
    std::int64_t minutes = 0;  // since 1970-01-01 00:00

    static Timestamp from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0) {
        using namespace std::chrono;
        const sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
        return {static_cast<std::int64_t>(d.time_since_epoch().count()) * 1440 + hour * 60 + minute};
    }

    Timestamp plus_hours(std::int64_t h) const { return {minutes + h * 60}; }

    auto operator<=>(const Timestamp&) const = default;
};

namespace detail {

struct Civil {
    int year;
    unsigned month, day;
    int hour, minute;
};

inline Civil to_civil(Timestamp ts) {
    using namespace std::chrono;
    std::int64_t days = ts.minutes / 1440;
    std::int64_t rem = ts.minutes % 1440;
    if (rem < 0) {
        rem += 1440;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 60), static_cast<int>(rem % 60)};
}

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return r.ec == std::errc{};
}

inline std::optional<Timestamp> parse(std::string_view s, char date_time_sep, bool colon) {
    // YYYY-MM-DD<sep>HH[:]MM
    const std::size_t expect = colon ? 16 : 15;
    if (s.size() != expect || s[4] != '-' || s[7] != '-' || s[10] != date_time_sep) return std::nullopt;
    if (colon && s[13] != ':') return std::nullopt;
    int y, mo, d, h, mi;
    if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d) ||
        !read_int(s, 11, 2, h) || !read_int(s, colon ? 14 : 13, 2, mi))
        return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                             std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59) return std::nullopt;
    return Timestamp::from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi);
}

}  // namespace detail

// "YYYY-MM-DD HH:MM", the user-facing format.
inline std::string format_display(Timestamp ts) {
    const auto c = detail::to_civil(ts);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", c.year, c.month, c.day, c.hour, c.minute);
    return buf;
}

// "YYYY-MM-DD_HHMM", the on-disk frame file stem (no colon).
inline std::string format_stem(Timestamp ts) {
    const auto c = detail::to_civil(ts);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u_%02d%02d", c.year, c.month, c.day, c.hour, c.minute);
    return buf;
}

inline std::optional<Timestamp> parse_display(std::string_view s) { return detail::parse(s, ' ', true); }
inline std::optional<Timestamp> parse_stem(std::string_view s) { return detail::parse(s, '_', false); }

}  // namespace climoe::data
