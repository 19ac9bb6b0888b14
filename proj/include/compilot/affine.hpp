#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace compilot {

// Linear form over named symbols (iterators, parameters) plus a constant.
class AffineExpr {
 public:
  using Term = std::pair<std::string, std::int64_t>;

  AffineExpr() = default;
  AffineExpr(std::int64_t constant) : constant_(constant) {}  // NOLINT implicit
  static AffineExpr symbol(std::string name, std::int64_t coeff = 1);

  std::int64_t coeff(std::string_view name) const;
  std::int64_t constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  bool references(std::string_view name) const { return coeff(name) != 0; }

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(std::int64_t k);
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(AffineExpr a, std::int64_t k) { return a *= k; }
  friend AffineExpr operator*(std::int64_t k, AffineExpr a) { return a *= k; }
  AffineExpr operator-() const { return *this * -1; }

  // Simultaneous substitution; symbols absent from the map are kept.
  AffineExpr substitute(const std::map<std::string, AffineExpr, std::less<>>& subst) const;
  AffineExpr substitute(std::string_view name, const AffineExpr& replacement) const;
  AffineExpr without_constant() const;
  // gcd of all symbol coefficients (0 if constant)
  std::int64_t content() const;

  std::int64_t evaluate(const std::function<std::int64_t(std::string_view)>& lookup) const;
  std::string to_string() const;

  bool operator==(const AffineExpr&) const = default;
  bool operator<(const AffineExpr& other) const;

 private:
  void add_term(const std::string& name, std::int64_t coeff);

  std::vector<Term> terms_;  // sorted by name, no zero coefficients
  std::int64_t constant_ = 0;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b);
std::int64_t ceil_div(std::int64_t a, std::int64_t b);

// floor(numerator / divisor), divisor >= 1
struct BoundTerm {
  AffineExpr numerator;
  std::int64_t divisor = 1;

  std::string to_string() const;
  bool operator==(const BoundTerm&) const = default;
  bool operator<(const BoundTerm& other) const;
};

// Lower bounds take the max over terms, upper bounds (exclusive) the min.
struct Bound {
  std::vector<BoundTerm> terms;

  Bound() = default;
  Bound(AffineExpr e) : terms{BoundTerm{std::move(e), 1}} {}  // NOLINT implicit
  bool is_simple() const { return terms.size() == 1 && terms[0].divisor == 1; }
  const AffineExpr& simple() const { return terms.front().numerator; }
  bool references(std::string_view name) const;
  Bound substitute(const std::map<std::string, AffineExpr, std::less<>>& subst) const;
  std::int64_t evaluate_lower(const std::function<std::int64_t(std::string_view)>& lookup) const;
  std::int64_t evaluate_upper(const std::function<std::int64_t(std::string_view)>& lookup) const;
  std::string to_string(bool is_lower) const;
  bool operator==(const Bound&) const = default;
};

// Affine constraint: expr >= 0.
using Constraint = AffineExpr;

struct LoopBounds {
  Bound lower;
  Bound upper;  // exclusive
};

// Constraints describing lower <= var < upper.
std::vector<Constraint> bound_constraints(const std::string& var, const Bound& lower, const Bound& upper);

// Fourier-Motzkin projection: bounds for each of `vars` (outermost first) in terms of
// symbols outside `vars` and outer entries of `vars`. Constraints mentioning none of
// `vars` are dropped.
std::vector<LoopBounds> derive_bounds(const std::vector<Constraint>& constraints,
                                      const std::vector<std::string>& vars);

// Closed interval over int64 with infinite endpoints.
struct Interval {
  static constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min();
  static constexpr std::int64_t kPosInf = std::numeric_limits<std::int64_t>::max();

  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static Interval exact(std::int64_t v) { return {v, v}; }
  static Interval star() { return {kNegInf, kPosInf}; }
  static Interval at_least(std::int64_t v) { return {v, kPosInf}; }

  bool is_exact() const { return lo == hi; }
  bool is_star() const { return lo == kNegInf && hi == kPosInf; }
  bool contains(std::int64_t v) const { return lo <= v && v <= hi; }
  bool surely_zero() const { return lo == 0 && hi == 0; }
  bool surely_positive() const { return lo > 0; }
  bool may_be_negative() const { return lo < 0; }

  Interval operator+(const Interval& o) const;
  Interval operator-() const;
  Interval scale(std::int64_t k) const;
  Interval shift(std::int64_t k) const { return *this + exact(k); }
  Interval floordiv(std::int64_t d) const;  // set of floor(x/d)-differences enclosure, d >= 1
  std::string to_string() const;
  bool operator==(const Interval&) const = default;
};

}  // namespace compilot
