#pragma once

namespace linetherm::units {

inline constexpr double kelvin_offset = 273.15;
inline constexpr double seconds_per_hour = 3600.0;
inline constexpr double seconds_per_minute = 60.0;

constexpr double celsius_to_kelvin(double c) { return c + kelvin_offset; }
constexpr double kelvin_to_celsius(double k) { return k - kelvin_offset; }

constexpr double hours(double h) { return h * seconds_per_hour; }
constexpr double per_hour(double rate) { return rate / seconds_per_hour; }
constexpr double per_minute(double rate) { return rate / seconds_per_minute; }

}  // namespace linetherm::units
