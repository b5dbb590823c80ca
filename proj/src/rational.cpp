// Copyright 2026 The histoens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "histoens/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

#include "histoens/error.hpp"

namespace histoens {
namespace {

std::int64_t parse_digits(std::string_view digits, std::string_view whole) {
  std::int64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (digits.empty() || ec != std::errc() ||
      ptr != digits.data() + digits.size()) {
    throw ValidationError("not a non-negative rational: '" +
                          std::string(whole) + "'");
  }
  return value;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw ValidationError("rational arithmetic overflow");
  }
  return out;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) {
    throw ValidationError("rational needs num >= 0 and den > 0");
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::parse(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = parse_digits(text.substr(0, slash), text);
    const auto den = parse_digits(text.substr(slash + 1), text);
    if (den == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto int_part = text.substr(0, dot);
    const auto frac_part = text.substr(dot + 1);
    if (frac_part.size() > 15) {
      throw ValidationError("too many decimal places in '" + std::string(text) + "'");
    }
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
    const std::int64_t whole = int_part.empty() ? 0 : parse_digits(int_part, text);
    const std::int64_t frac = frac_part.empty() ? 0 : parse_digits(frac_part, text);
    std::int64_t num = 0;
    if (__builtin_add_overflow(checked_mul(whole, den), frac, &num)) {
      throw ValidationError("rational arithmetic overflow");
    }
    return Rational(num, den);
  }
  return Rational(parse_digits(text, text), 1);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t g = std::gcd(a.den_, b.den_);
  const std::int64_t den = checked_mul(a.den_ / g, b.den_);
  std::int64_t num = 0;
  if (__builtin_add_overflow(checked_mul(a.num_, b.den_ / g),
                             checked_mul(b.num_, a.den_ / g), &num)) {
    throw ValidationError("rational arithmetic overflow");
  }
  return Rational(num, den);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
  const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
  return lhs <=> rhs;
}

}  // namespace histoens
