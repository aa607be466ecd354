#include "ofc/money.hpp"

#include <cmath>
#include <cstdio>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

namespace {

std::string digits_of(Usd::Rep value) {
  if (value == 0) return "0";
  std::string out;
  while (value > 0) {
    out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return out;
}

}  // namespace

Usd Usd::parse(std::string_view text) {
  std::string_view s = trim(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (s.empty()) throw Error(ErrorCode::kInvalidArgument, "empty decimal amount");

  Rep whole = 0;
  Rep frac = 0;
  int frac_digits = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) throw Error(ErrorCode::kInvalidArgument, "bad decimal: " + std::string(text));
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::kInvalidArgument, "bad decimal: " + std::string(text));
    }
    seen_digit = true;
    if (seen_point) {
      if (++frac_digits > kScaleDigits) {
        throw Error(ErrorCode::kInvalidArgument, "too many fractional digits: " + std::string(text));
      }
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > static_cast<Rep>(1'000'000'000'000'000LL)) {
        throw Error(ErrorCode::kInvalidArgument, "amount out of range: " + std::string(text));
      }
    }
  }
  if (!seen_digit) throw Error(ErrorCode::kInvalidArgument, "bad decimal: " + std::string(text));
  for (int i = frac_digits; i < kScaleDigits; ++i) frac *= 10;
  Rep units = whole * kUnit + frac;
  return from_units(negative ? -units : units);
}

Usd Usd::from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::kInvalidArgument, "non-finite amount");
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12f", value);
  return parse(buffer);
}

double Usd::to_double() const {
  return static_cast<double>(units_ / kUnit) +
         static_cast<double>(units_ % kUnit) / static_cast<double>(kUnit);
}

int Usd::fractional_digits() const {
  Rep frac = (units_ < 0 ? -units_ : units_) % kUnit;
  if (frac == 0) return 0;
  int digits = kScaleDigits;
  while (frac % 10 == 0) {
    frac /= 10;
    --digits;
  }
  return digits;
}

std::string Usd::to_string() const {
  Rep magnitude = units_ < 0 ? -units_ : units_;
  std::string frac = digits_of(magnitude % kUnit);
  frac.insert(frac.begin(), static_cast<std::size_t>(kScaleDigits) - frac.size(), '0');
  while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
  return (units_ < 0 ? "-" : "") + digits_of(magnitude / kUnit) + "." + frac;
}

std::string Usd::to_cents() const {
  constexpr Rep kCent = kUnit / 100;
  Rep magnitude = units_ < 0 ? -units_ : units_;
  Rep cents = magnitude / kCent;
  Rep remainder = magnitude % kCent;
  if (remainder * 2 > kCent || (remainder * 2 == kCent && cents % 2 == 1)) ++cents;
  std::string frac = digits_of(cents % 100);
  if (frac.size() < 2) frac.insert(frac.begin(), '0');
  bool negative = units_ < 0 && cents != 0;
  return (negative ? "-" : "") + digits_of(cents / 100) + "." + frac;
}

}  // namespace ofc
