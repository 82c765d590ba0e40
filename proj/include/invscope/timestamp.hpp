#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace invscope {

using Millis = std::chrono::milliseconds;

/// UTC instant with millisecond precision. Text form is RFC-3339 with a
/// three-digit fraction and a `Z` suffix.
class Timestamp {
public:
    constexpr Timestamp() = default;

    static constexpr Timestamp from_millis(std::int64_t ms) { return Timestamp(ms); }
    static Timestamp now();

    /// Accepts `YYYY-MM-DDTHH:MM:SS[.f+](Z|+HH:MM|-HH:MM)`. Offsets are
    /// normalized to UTC; fractions beyond milliseconds are truncated.
    static std::optional<Timestamp> parse(std::string_view text);

    constexpr std::int64_t millis() const { return ms_; }
    std::string to_string() const;

    /// Start of the UTC day containing this instant.
    Timestamp day_floor() const;
    /// Fractional hour of the UTC day, in [0, 24).
    double hour_of_day() const;

    constexpr Timestamp operator+(Millis d) const { return Timestamp(ms_ + d.count()); }
    constexpr Timestamp operator-(Millis d) const { return Timestamp(ms_ - d.count()); }
    constexpr Millis operator-(Timestamp other) const { return Millis(ms_ - other.ms_); }

    constexpr auto operator<=>(const Timestamp&) const = default;

private:
    constexpr explicit Timestamp(std::int64_t ms) : ms_(ms) {}
    std::int64_t ms_ = 0;
};

constexpr Millis seconds_ms(std::int64_t s) { return Millis(s * 1000); }

}  // namespace invscope
