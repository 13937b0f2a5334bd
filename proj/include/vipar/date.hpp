#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace vipar {

// Calendar date with day resolution. Stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}

    static constexpr Date from_days(int days_since_epoch) {
        Date d;
        d.days_ = days_since_epoch;
        return d;
    }

    static std::optional<Date> from_ymd(int y, unsigned m, unsigned d) {
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                              std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date{std::chrono::sys_days{ymd}};
    }

    // Strict ISO-8601 YYYY-MM-DD.
    static std::optional<Date> parse(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
            int v = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                if (s[i] < '0' || s[i] > '9') return std::nullopt;
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        const auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
        if (!y || !m || !d) return std::nullopt;
        return from_ymd(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
    }

    constexpr int days_since_epoch() const noexcept { return days_; }

    std::chrono::year_month_day ymd() const {
        return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_}}};
    }

    int year() const { return static_cast<int>(ymd().year()); }

    std::string to_string() const {
        const auto v = ymd();
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                      static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
        return buf;
    }

    constexpr Date plus_days(int n) const { return from_days(days_ + n); }

    // Same month/day shifted by whole years; Feb 29 falls back to Feb 28.
    Date plus_years(int n) const {
        auto v = ymd();
        auto shifted = std::chrono::year_month_day{v.year() + std::chrono::years{n}, v.month(), v.day()};
        if (!shifted.ok())
            shifted = std::chrono::year_month_day{shifted.year(), shifted.month(), std::chrono::day{28}};
        return Date{std::chrono::sys_days{shifted}};
    }

    friend constexpr int operator-(Date a, Date b) noexcept { return a.days_ - b.days_; }
    friend constexpr auto operator<=>(Date, Date) = default;

private:
    int days_ = 0;
};

// Closed interval [first, last].
struct DateRange {
    Date first;
    Date last;

    constexpr bool contains(Date d) const noexcept { return first <= d && d <= last; }
};

} // namespace vipar
