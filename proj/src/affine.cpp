#include "compilot/affine.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "compilot/error.hpp"

namespace compilot {

AffineExpr AffineExpr::symbol(std::string name, std::int64_t coeff) {
  AffineExpr e;
  e.add_term(name, coeff);
  return e;
}

std::int64_t AffineExpr::coeff(std::string_view name) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), name,
                             [](const Term& t, std::string_view n) { return t.first < n; });
  if (it != terms_.end() && it->first == name) return it->second;
  return 0;
}

void AffineExpr::add_term(const std::string& name, std::int64_t coeff) {
  if (coeff == 0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), name,
                             [](const Term& t, const std::string& n) { return t.first < n; });
  if (it != terms_.end() && it->first == name) {
    it->second += coeff;
    if (it->second == 0) terms_.erase(it);
  } else {
    terms_.insert(it, Term{name, coeff});
  }
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  for (const auto& [n, c] : other.terms_) add_term(n, c);
  constant_ += other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  for (const auto& [n, c] : other.terms_) add_term(n, -c);
  constant_ -= other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator*=(std::int64_t k) {
  if (k == 0) {
    terms_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& t : terms_) t.second *= k;
  constant_ *= k;
  return *this;
}

AffineExpr AffineExpr::substitute(const std::map<std::string, AffineExpr, std::less<>>& subst) const {
  AffineExpr out(constant_);
  for (const auto& [n, c] : terms_) {
    auto it = subst.find(n);
    if (it == subst.end()) {
      out.add_term(n, c);
    } else {
      out += it->second * c;
    }
  }
  return out;
}

AffineExpr AffineExpr::substitute(std::string_view name, const AffineExpr& replacement) const {
  std::map<std::string, AffineExpr, std::less<>> m;
  m.emplace(std::string(name), replacement);
  return substitute(m);
}

AffineExpr AffineExpr::without_constant() const {
  AffineExpr e = *this;
  e.constant_ = 0;
  return e;
}

std::int64_t AffineExpr::content() const {
  std::int64_t g = 0;
  for (const auto& t : terms_) g = std::gcd(g, t.second);
  return g < 0 ? -g : g;
}

std::int64_t AffineExpr::evaluate(const std::function<std::int64_t(std::string_view)>& lookup) const {
  std::int64_t v = constant_;
  for (const auto& [n, c] : terms_) v += c * lookup(n);
  return v;
}

bool AffineExpr::operator<(const AffineExpr& other) const {
  if (terms_ != other.terms_) return terms_ < other.terms_;
  return constant_ < other.constant_;
}

namespace {

// Iterators (lowercase) print before parameters.
bool print_order(const AffineExpr::Term& a, const AffineExpr::Term& b) {
  bool ua = !a.first.empty() && std::isupper(static_cast<unsigned char>(a.first[0]));
  bool ub = !b.first.empty() && std::isupper(static_cast<unsigned char>(b.first[0]));
  if (ua != ub) return !ua;
  return a.first < b.first;
}

}  // namespace

std::string AffineExpr::to_string() const {
  std::vector<Term> ordered = terms_;
  std::sort(ordered.begin(), ordered.end(), print_order);
  std::string out;
  for (const auto& [n, c] : ordered) {
    std::int64_t mag = c < 0 ? -c : c;
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    if (mag != 1) out += fmt::format("{}*", mag);
    out += n;
  }
  if (out.empty()) return fmt::format("{}", constant_);
  if (constant_ > 0) out += fmt::format(" + {}", constant_);
  if (constant_ < 0) out += fmt::format(" - {}", -constant_);
  return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::string BoundTerm::to_string() const {
  if (divisor == 1) return numerator.to_string();
  return fmt::format("floord({}, {})", numerator.to_string(), divisor);
}

bool BoundTerm::operator<(const BoundTerm& other) const {
  if (divisor != other.divisor) return divisor < other.divisor;
  return numerator < other.numerator;
}

bool Bound::references(std::string_view name) const {
  return std::any_of(terms.begin(), terms.end(),
                     [&](const BoundTerm& t) { return t.numerator.references(name); });
}

Bound Bound::substitute(const std::map<std::string, AffineExpr, std::less<>>& subst) const {
  Bound out;
  for (const auto& t : terms) out.terms.push_back({t.numerator.substitute(subst), t.divisor});
  return out;
}

std::int64_t Bound::evaluate_lower(const std::function<std::int64_t(std::string_view)>& lookup) const {
  std::int64_t v = Interval::kNegInf;
  for (const auto& t : terms) v = std::max(v, floor_div(t.numerator.evaluate(lookup), t.divisor));
  return v;
}

std::int64_t Bound::evaluate_upper(const std::function<std::int64_t(std::string_view)>& lookup) const {
  std::int64_t v = Interval::kPosInf;
  for (const auto& t : terms) v = std::min(v, floor_div(t.numerator.evaluate(lookup), t.divisor));
  return v;
}

std::string Bound::to_string(bool is_lower) const {
  if (terms.empty()) return "0";
  std::string acc = terms.back().to_string();
  for (std::size_t i = terms.size() - 1; i-- > 0;) {
    acc = fmt::format("{}({}, {})", is_lower ? "max" : "min", terms[i].to_string(), acc);
  }
  return acc;
}

std::vector<Constraint> bound_constraints(const std::string& var, const Bound& lower, const Bound& upper) {
  std::vector<Constraint> out;
  AffineExpr v = AffineExpr::symbol(var);
  // v >= floor(e/d)  <=>  d*v >= e - (d-1)
  for (const auto& t : lower.terms) out.push_back(v * t.divisor - t.numerator + (t.divisor - 1));
  // v < floor(e/d)  <=>  v <= floor(e/d) - 1  <=>  d*v <= e - d
  for (const auto& t : upper.terms) out.push_back(t.numerator - v * t.divisor - t.divisor);
  return out;
}

namespace {

// Divide by the coefficient gcd, tightening the constant for integer points.
Constraint normalize(const Constraint& c) {
  std::int64_t g = c.content();
  if (g <= 1) return c;
  AffineExpr lin = c.without_constant();
  AffineExpr out;
  for (const auto& [n, k] : lin.terms()) out += AffineExpr::symbol(n, k / g);
  return out + floor_div(c.constant(), g);
}

bool mentions_any(const Constraint& c, const std::vector<std::string>& vars, std::size_t upto) {
  for (std::size_t i = 0; i < upto; ++i) {
    if (c.references(vars[i])) return true;
  }
  return false;
}

// Keep only the tightest constraint per linear part.
std::vector<Constraint> dedupe(const std::vector<Constraint>& cs) {
  std::map<AffineExpr, std::int64_t> best;
  for (const auto& c : cs) {
    AffineExpr n = normalize(c);
    AffineExpr lin = n.without_constant();
    auto it = best.find(lin);
    if (it == best.end()) {
      best.emplace(lin, n.constant());
    } else {
      it->second = std::min(it->second, n.constant());
    }
  }
  std::vector<Constraint> out;
  for (const auto& [lin, k] : best) out.push_back(lin + k);
  return out;
}

// Among terms with identical linear part and divisor keep the dominating constant.
std::vector<BoundTerm> prune_terms(std::vector<BoundTerm> terms, bool is_lower) {
  std::map<std::pair<std::int64_t, AffineExpr>, std::int64_t> best;
  for (const auto& t : terms) {
    auto key = std::make_pair(t.divisor, t.numerator.without_constant());
    auto it = best.find(key);
    std::int64_t k = t.numerator.constant();
    if (it == best.end()) {
      best.emplace(key, k);
    } else {
      it->second = is_lower ? std::max(it->second, k) : std::min(it->second, k);
    }
  }
  std::vector<BoundTerm> out;
  for (const auto& [key, k] : best) out.push_back({key.second + k, key.first});
  // constant terms last so that printing reads max(expr, 0)
  std::stable_sort(out.begin(), out.end(), [](const BoundTerm& a, const BoundTerm& b) {
    return !a.numerator.is_constant() && b.numerator.is_constant();
  });
  return out;
}

}  // namespace

std::vector<LoopBounds> derive_bounds(const std::vector<Constraint>& constraints,
                                      const std::vector<std::string>& vars) {
  std::vector<LoopBounds> result(vars.size());
  std::vector<Constraint> current;
  for (const auto& c : constraints) {
    if (mentions_any(c, vars, vars.size())) current.push_back(c);
  }
  current = dedupe(current);
  for (std::size_t k = vars.size(); k-- > 0;) {
    const std::string& v = vars[k];
    std::vector<BoundTerm> lower, upper;
    std::vector<Constraint> pos, neg, rest;
    for (const auto& c : current) {
      std::int64_t a = c.coeff(v);
      if (a == 0) {
        rest.push_back(c);
        continue;
      }
      AffineExpr r = c - AffineExpr::symbol(v, a);
      if (a > 0) {
        // a*v + r >= 0  =>  v >= ceil(-r/a)
        lower.push_back({-r + (a - 1), a});
        pos.push_back(c);
      } else {
        // |a|*v <= r  =>  v < floor(r/|a|) + 1
        upper.push_back({r + (-a), -a});
        neg.push_back(c);
      }
    }
    if (lower.empty() || upper.empty()) {
      throw InternalError(fmt::format("unbounded loop variable {} during bound derivation", v));
    }
    result[k].lower.terms = prune_terms(std::move(lower), true);
    result[k].upper.terms = prune_terms(std::move(upper), false);
    for (const auto& p : pos) {
      for (const auto& n : neg) {
        std::int64_t ap = p.coeff(v), an = -n.coeff(v);
        std::int64_t g = std::gcd(ap, an);
        Constraint comb = p * (an / g) + n * (ap / g);
        rest.push_back(comb);
      }
    }
    std::vector<Constraint> next;
    for (const auto& c : rest) {
      if (mentions_any(c, vars, k)) next.push_back(c);
    }
    current = dedupe(next);
  }
  return result;
}

namespace {

std::int64_t sat_add(std::int64_t a, std::int64_t b) {
  if (a == Interval::kNegInf || b == Interval::kNegInf) return Interval::kNegInf;
  if (a == Interval::kPosInf || b == Interval::kPosInf) return Interval::kPosInf;
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) return a > 0 ? Interval::kPosInf : Interval::kNegInf;
  return r;
}

std::int64_t sat_mul(std::int64_t a, std::int64_t k) {
  if (k == 0) return 0;
  if (a == Interval::kNegInf) return k > 0 ? Interval::kNegInf : Interval::kPosInf;
  if (a == Interval::kPosInf) return k > 0 ? Interval::kPosInf : Interval::kNegInf;
  std::int64_t r;
  if (__builtin_mul_overflow(a, k, &r)) return ((a > 0) == (k > 0)) ? Interval::kPosInf : Interval::kNegInf;
  return r;
}

std::int64_t neg(std::int64_t a) {
  if (a == Interval::kNegInf) return Interval::kPosInf;
  if (a == Interval::kPosInf) return Interval::kNegInf;
  return -a;
}

}  // namespace

Interval Interval::operator+(const Interval& o) const {
  std::int64_t l = (lo == kNegInf || o.lo == kNegInf) ? kNegInf : sat_add(lo, o.lo);
  std::int64_t h = (hi == kPosInf || o.hi == kPosInf) ? kPosInf : sat_add(hi, o.hi);
  return {l, h};
}

Interval Interval::operator-() const { return {neg(hi), neg(lo)}; }

Interval Interval::scale(std::int64_t k) const {
  if (k == 0) return exact(0);
  if (k > 0) return {sat_mul(lo, k), sat_mul(hi, k)};
  return {sat_mul(hi, k), sat_mul(lo, k)};
}

// floor(x/d) - floor(y/d) for x - y in [lo, hi] lies in [floor(lo/d), ceil(hi/d)]
Interval Interval::floordiv(std::int64_t d) const {
  std::int64_t l = lo == kNegInf ? kNegInf : floor_div(lo, d);
  std::int64_t h = hi == kPosInf ? kPosInf : ceil_div(hi, d);
  return {l, h};
}

std::string Interval::to_string() const {
  if (is_exact()) return fmt::format("{}", lo);
  if (is_star()) return "*";
  std::string l = lo == kNegInf ? "-inf" : fmt::format("{}", lo);
  std::string h = hi == kPosInf ? "inf" : fmt::format("{}", hi);
  return fmt::format("[{},{}]", l, h);
}

}  // namespace compilot
