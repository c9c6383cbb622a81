#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <string>

#include "hjm/errors.hpp"

namespace hjm {

/// A value in R ∪ {+∞}.
///
/// Lagrangians of Hamiltonians with linear growth take the value +∞ outside a bounded
/// speed range, so +∞ is an ordinary value here. Arithmetic saturates (∞ + a = ∞) and
/// scaling follows the measure-theoretic convention 0 · ∞ = 0, which is what an integral
/// over a zero-length interval needs. −∞ and NaN are rejected at construction.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;

  // NOLINTNEXTLINE(google-explicit-constructor): finite doubles convert implicitly.
  ExtendedReal(double value) : value_(value) {
    if (std::isnan(value) || value == -std::numeric_limits<double>::infinity()) {
      throw InputError("ExtendedReal: value must be finite or +inf");
    }
  }

  static ExtendedReal infinity() { return ExtendedReal(std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(value_); }
  bool is_infinite() const { return !is_finite(); }

  /// Raw double; +inf for the infinite value.
  double raw() const { return value_; }

  /// Finite payload. Throws if the value is +∞.
  double value() const {
    if (!is_finite()) throw InputError("ExtendedReal: value() on +inf");
    return value_;
  }

  ExtendedReal& operator+=(ExtendedReal other) {
    value_ = (is_infinite() || other.is_infinite()) ? std::numeric_limits<double>::infinity()
                                                    : value_ + other.value_;
    return *this;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) { return a += b; }

  /// Scaling by a nonnegative factor; 0 · ∞ = 0.
  ExtendedReal scaled(double factor) const {
    if (factor < 0.0 || std::isnan(factor)) throw InputError("ExtendedReal: negative scale factor");
    if (factor == 0.0) return ExtendedReal(0.0);
    return is_infinite() ? infinity() : ExtendedReal(value_ * factor);
  }

  friend bool operator==(ExtendedReal a, ExtendedReal b) { return a.value_ == b.value_; }
  friend std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) { return a.value_ <=> b.value_; }

  /// Shortest round-trip decimal, or the literal "inf".
  std::string to_string() const;

  /// Accepts anything `to_string` produces.
  static ExtendedReal parse(const std::string& text);

 private:
  double value_ = 0.0;
};

inline ExtendedReal min(ExtendedReal a, ExtendedReal b) { return b < a ? b : a; }
inline ExtendedReal max(ExtendedReal a, ExtendedReal b) { return b > a ? b : a; }

/// Shortest decimal that parses back to the same double; "inf" for +inf.
std::string format_double(double value);

}  // namespace hjm
