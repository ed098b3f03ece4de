#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "cdfest/error.hpp"

namespace cdfest {

/// One interval endpoint in normalized space: a finite real or an explicit
/// -inf / +inf sentinel. Univariate CDFs return exactly 0 / 1 at the sentinels.
class Endpoint {
 public:
  enum class Kind : std::uint8_t { kNegInf, kFinite, kPosInf };

  constexpr Endpoint() = default;

  static constexpr Endpoint neg_inf() { return Endpoint(Kind::kNegInf, 0.0); }
  static constexpr Endpoint pos_inf() { return Endpoint(Kind::kPosInf, 0.0); }

  static Endpoint finite(double value) {
    if (!std::isfinite(value)) {
      throw InvalidInput("Endpoint::finite requires a finite value");
    }
    return Endpoint(Kind::kFinite, value);
  }

  /// Maps +-infinity onto the sentinels. NaN is rejected.
  static Endpoint from_double(double value) {
    if (std::isnan(value)) {
      throw InvalidInput("NaN endpoint");
    }
    if (std::isinf(value)) {
      return value > 0 ? pos_inf() : neg_inf();
    }
    return Endpoint(Kind::kFinite, value);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::kFinite; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::kNegInf; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::kPosInf; }

  /// Finite value, or +-infinity for the sentinels.
  double as_double() const {
    switch (kind_) {
      case Kind::kNegInf:
        return -std::numeric_limits<double>::infinity();
      case Kind::kPosInf:
        return std::numeric_limits<double>::infinity();
      case Kind::kFinite:
        break;
    }
    return value_;
  }

  friend constexpr bool operator==(const Endpoint& a, const Endpoint& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::kFinite || a.value_ == b.value_);
  }

 private:
  constexpr Endpoint(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_ = Kind::kNegInf;
  double value_ = 0.0;
};

/// Half-open interval [lower, upper). lower > upper is legal and carries zero mass.
struct Interval {
  Endpoint lower = Endpoint::neg_inf();
  Endpoint upper = Endpoint::pos_inf();

  static constexpr Interval full() { return Interval{}; }
  bool is_full() const { return lower.is_neg_inf() && upper.is_pos_inf(); }
};

/// A compiled conjunctive query: one interval per model column, normalized space.
class QueryBox {
 public:
  QueryBox() = default;
  explicit QueryBox(std::size_t dims) : intervals_(dims) {}
  explicit QueryBox(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {}

  static QueryBox full(std::size_t dims) { return QueryBox(dims); }

  std::size_t dims() const { return intervals_.size(); }
  Interval& operator[](std::size_t j) { return intervals_[j]; }
  const Interval& operator[](std::size_t j) const { return intervals_[j]; }
  const std::vector<Interval>& intervals() const { return intervals_; }

 private:
  std::vector<Interval> intervals_;
};

/// Corner selector for inclusion-exclusion: bit j set means coordinate j takes the
/// upper endpoint.
struct CornerSign {
  std::uint32_t bits = 0;
  std::uint32_t dims = 0;

  bool upper(std::size_t j) const { return (bits >> j) & 1u; }
  int popcount() const { return __builtin_popcount(bits); }
  /// (-1)^(d - |s|)
  int sign() const { return ((dims - popcount()) & 1u) ? -1 : 1; }
};

}  // namespace cdfest
