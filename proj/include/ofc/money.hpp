#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ofc {

// Exact decimal US dollars, fixed point at 1e-18 USD.
//
// All cost accounting goes through this type so that sums never pick up
// binary floating-point drift. Rounding only happens in to_cents().
class Usd {
 public:
  using Rep = __int128;
  static constexpr int kScaleDigits = 18;
  static constexpr Rep kUnit = static_cast<Rep>(1'000'000'000'000'000'000LL);

  constexpr Usd() = default;

  static constexpr Usd from_units(Rep units) {
    Usd usd;
    usd.units_ = units;
    return usd;
  }
  static constexpr Usd whole(std::int64_t dollars) { return from_units(dollars * kUnit); }

  // Accepts "12", "0.5", "-3.25", "$1.00". Throws InvalidArgument on more
  // than 18 fractional digits or junk characters.
  static Usd parse(std::string_view text);

  // Rounds the double to the nearest 1e-12 first, which recovers the
  // decimal literal for any value printed with up to 12 decimals.
  static Usd from_double(double value);

  constexpr Rep units() const { return units_; }
  double to_double() const;

  // Exact representation with trailing zeros trimmed (at least 2 decimals).
  std::string to_string() const;
  // Rounded half-to-even to whole cents, e.g. "14.70".
  std::string to_cents() const;

  // Number of fractional digits needed to write this amount exactly.
  int fractional_digits() const;

  constexpr Usd operator+(Usd other) const { return from_units(units_ + other.units_); }
  constexpr Usd operator-(Usd other) const { return from_units(units_ - other.units_); }
  constexpr Usd& operator+=(Usd other) {
    units_ += other.units_;
    return *this;
  }
  constexpr Usd operator*(std::uint64_t count) const {
    return from_units(units_ * static_cast<Rep>(count));
  }

  constexpr bool operator==(const Usd&) const = default;
  constexpr auto operator<=>(const Usd&) const = default;

 private:
  Rep units_ = 0;
};

}  // namespace ofc
