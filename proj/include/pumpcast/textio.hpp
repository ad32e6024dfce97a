#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pumpcast/error.hpp"

namespace pumpcast {

// ---------------------------------------------------------------------------
// Minute-resolution UTC timestamps. Stored as minutes since the Unix epoch,
// printed/parsed as ISO-8601 "YYYY-MM-DDTHH:MM".
// ---------------------------------------------------------------------------

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += (m <= 2);
}

inline bool all_digits(std::string_view s) {
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return !s.empty();
}

inline unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[m - 1];
}

}  // namespace detail

// Strict parse of "YYYY-MM-DDTHH:MM"; nullopt on any malformation.
inline std::optional<std::int64_t> parse_minute(std::string_view s) {
    if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':')
        return std::nullopt;
    const std::string_view ys = s.substr(0, 4), ms = s.substr(5, 2), ds = s.substr(8, 2),
                           hs = s.substr(11, 2), mins = s.substr(14, 2);
    if (!detail::all_digits(ys) || !detail::all_digits(ms) || !detail::all_digits(ds) ||
        !detail::all_digits(hs) || !detail::all_digits(mins))
        return std::nullopt;
    auto num = [](std::string_view v) {
        int out = 0;
        for (char c : v) out = out * 10 + (c - '0');
        return out;
    };
    const int y = num(ys), mo = num(ms), d = num(ds), h = num(hs), mi = num(mins);
    if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59) return std::nullopt;
    if (static_cast<unsigned>(d) > detail::days_in_month(y, static_cast<unsigned>(mo)))
        return std::nullopt;
    const std::int64_t days =
        detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return days * 1440 + h * 60 + mi;
}

inline std::string format_minute(std::int64_t minute) {
    std::int64_t days = minute / 1440;
    std::int64_t rem = minute % 1440;
    if (rem < 0) {
        rem += 1440;
        days -= 1;
    }
    std::int64_t y;
    unsigned m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

// ---------------------------------------------------------------------------
// Numbers. Shortest round-trip formatting keeps every emitted file bit-stable
// and re-ingestable without loss.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// CSV plumbing. Fields here are numeric or enum tokens, so no quoting rules.
// ---------------------------------------------------------------------------

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Splits on '\n'; tolerates a trailing '\r' per line so CRLF input ingests.
inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        std::string_view line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = pos + 1;
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace pumpcast
