#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace emsim {

/// Exact simulation time. Arithmetic never rounds, so horizon comparisons
/// and same-time tie detection are reliable across arbitrarily long runs.
class Time {
 public:
  using rep = boost::multiprecision::mpq_rational;

  Time() = default;
  Time(std::int64_t whole) : value_(static_cast<long long>(whole)) {}  // NOLINT(implicit)
  Time(std::int64_t numerator, std::int64_t denominator) {
    if (denominator == 0) throw std::invalid_argument("Time: zero denominator");
    value_ = rep(static_cast<long long>(numerator), static_cast<long long>(denominator));
  }
  explicit Time(rep value) : value_(std::move(value)) {}

  /// Accepts "n", "n/d", with optional leading '-'.
  static Time parse(std::string_view text) {
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    auto is_integer = [](std::string_view s) {
      if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
      if (s.empty()) return false;
      for (char c : s)
        if (c < '0' || c > '9') return false;
      return true;
    };
    const auto slash = text.find('/');
    const auto num = text.substr(0, slash);
    const auto den = slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
    if (!is_integer(num) || !is_integer(den) || den.front() == '-' || den.front() == '+')
      throw std::invalid_argument("Time: cannot parse '" + std::string(text) + "'");
    boost::multiprecision::mpz_int n(std::string(num.front() == '+' ? num.substr(1) : num));
    boost::multiprecision::mpz_int d{std::string(den)};
    if (d == 0) throw std::invalid_argument("Time: zero denominator in '" + std::string(text) + "'");
    return Time(rep(n, d));
  }

  const rep& value() const noexcept { return value_; }

  /// Canonical "numerator/denominator" form, e.g. "5/4", "2/1".
  std::string str() const {
    return boost::multiprecision::numerator(value_).str() + "/" +
           boost::multiprecision::denominator(value_).str();
  }

  /// Human form: integers without a denominator ("2"), otherwise "5/4".
  std::string display() const {
    if (boost::multiprecision::denominator(value_) == 1) return boost::multiprecision::numerator(value_).str();
    return str();
  }

  Time reciprocal() const {
    if (value_ == 0) throw std::domain_error("Time: reciprocal of zero");
    return Time(rep(1) / value_);
  }

  Time& operator+=(const Time& o) { value_ += o.value_; return *this; }
  Time& operator-=(const Time& o) { value_ -= o.value_; return *this; }

  friend Time operator+(const Time& a, const Time& b) { return Time(rep(a.value_ + b.value_)); }
  friend Time operator-(const Time& a, const Time& b) { return Time(rep(a.value_ - b.value_)); }
  friend Time operator*(const Time& a, const Time& b) { return Time(rep(a.value_ * b.value_)); }
  friend Time operator/(const Time& a, const Time& b) {
    if (b.value_ == 0) throw std::domain_error("Time: division by zero");
    return Time(rep(a.value_ / b.value_));
  }
  friend Time operator-(const Time& a) { return Time(rep(-a.value_)); }

  friend bool operator==(const Time& a, const Time& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Time& a, const Time& b) {
    const int c = a.value_.compare(b.value_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Time& t) { return os << t.display(); }

 private:
  rep value_{0};
};

}  // namespace emsim

template <>
struct std::hash<emsim::Time> {
  std::size_t operator()(const emsim::Time& t) const { return std::hash<std::string>{}(t.str()); }
};
