#pragma once

// Non-perturbative terms of the double-well ground-state doublet: the
// one-instanton splitting, the two-instanton sector truncated in g, the
// coefficient table eps_{nlk}, and the leading four-instanton term.

#include <dwr/borel.hpp>
#include <dwr/numerics.hpp>

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace dwr {

/// a + b * gamma with gamma the Euler constant.
struct GammaLinear {
  ExactRational a;
  ExactRational b;

  BigReal evaluate(int digits) const {
    BigReal v(a, digits + 10);
    if (b != 0) v += BigReal(b, digits + 10) * BigReal::euler_gamma(digits + 10);
    return v.with_digits(digits);
  }
  friend bool operator==(const GammaLinear&, const GammaLinear&) = default;
};

struct CoefficientIndex {
  int n = 0, l = 0, k = 0;
  friend auto operator<=>(const CoefficientIndex&, const CoefficientIndex&) = default;
  std::string label() const {
    return "(" + std::to_string(n) + "," + std::to_string(l) + "," + std::to_string(k) + ")";
  }
};

/// One table entry. `decimal` marks values quoted only to finitely many
/// digits; `error` is the quoted half-width (zero for exact entries).
struct CoefficientEntry {
  GammaLinear value;
  ExactRational error{0};
  bool decimal = false;

  bool exact() const { return error == 0 && !decimal; }
};

class MissingCoefficientError : public std::out_of_range {
 public:
  explicit MissingCoefficientError(CoefficientIndex idx)
      : std::out_of_range("instanton coefficient eps" + idx.label() + " is not available"), index_(idx) {}
  CoefficientIndex index() const { return index_; }

 private:
  CoefficientIndex index_;
};

class InstantonCoefficients {
 public:
  void set(CoefficientIndex idx, CoefficientEntry e) { table_[idx] = std::move(e); }
  bool contains(CoefficientIndex idx) const { return table_.count(idx) != 0; }
  const CoefficientEntry& at(CoefficientIndex idx) const {
    auto it = table_.find(idx);
    if (it == table_.end()) throw MissingCoefficientError(idx);
    return it->second;
  }
  BigReal value(CoefficientIndex idx, int digits) const { return at(idx).value.evaluate(digits); }

  /// Largest K such that eps_{n l k} exists for every k <= K; -1 if none.
  int max_contiguous_k(int n, int l) const {
    int k = -1;
    while (contains({n, l, k + 1})) ++k;
    return k;
  }

  const std::map<CoefficientIndex, CoefficientEntry>& entries() const { return table_; }

 private:
  std::map<CoefficientIndex, CoefficientEntry> table_;
};

namespace detail {
inline ExactRational q(long num, long den = 1) {
  ExactRational r(num, den);
  r.canonicalize();
  return r;
}
inline ExactRational qs(const char* text) { return parse_rational(text); }
inline ExactRational decimal(const char* text) {
  // "-205496.5847" -> -2054965847/10000, "1.6e-10" -> 16/10^11
  std::string s(text);
  long exp10 = 0;
  if (const auto e = s.find_first_of("eE"); e != std::string::npos) {
    exp10 = std::stol(s.substr(e + 1));
    s.erase(e);
  }
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    exp10 -= static_cast<long>(s.size() - dot - 1);
    s.erase(dot, 1);
  }
  BigInteger scale = 1;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
  ExactRational r = parse_rational(s);
  if (exp10 >= 0) return r * ExactRational(scale);
  r /= ExactRational(scale);
  return r;
}
}  // namespace detail

inline InstantonCoefficients known_coefficients() {
  using detail::decimal;
  using detail::q;
  using detail::qs;
  InstantonCoefficients c;
  auto exact = [&](int l, int k, ExactRational a, ExactRational b) { c.set({2, l, k}, {{a, b}, 0, false}); };
  auto with_error = [&](int l, int k, ExactRational a, ExactRational b, ExactRational err, bool dec) {
    c.set({2, l, k}, {{a, b}, err, dec});
  };

  exact(0, 0, 0, 1);
  exact(1, 0, 1, 0);
  exact(0, 1, q(-23, 2), q(-53, 6));
  exact(1, 1, q(-53, 6), 0);
  exact(0, 2, q(13, 2), q(-1277, 72));
  exact(1, 2, q(-1277, 72), 0);

  with_error(0, 3, q(-45941, 144), q(-336437, 1296), decimal("1.6e-10"), false);
  with_error(0, 4, q(-20772221, 2592), q(-141158555, 31104), decimal("2e-6"), false);
  with_error(0, 5, decimal("-205496.5847"), qs("-17542610737/186624"), decimal("2e-3"), true);
  with_error(0, 6, decimal("6936980.4"), 0, decimal("4.8"), true);

  with_error(1, 3, q(-336437, 1296), 0, decimal("1.3e-21"), false);
  with_error(1, 4, q(-141158555, 31104), 0, decimal("4.2e-17"), false);
  with_error(1, 5, qs("-17542610737/186624"), 0, decimal("5.9e-13"), false);
  with_error(1, 6, decimal("-2221191.7314262645"), 0, decimal("4.8e-9"), true);
  with_error(1, 7, decimal("-58524267.633067"), 0, decimal("2.5e-5"), true);
  with_error(1, 8, decimal("-1695080020.213"), 0, decimal("9.5e-2"), true);
  with_error(1, 9, decimal("-53461315700"), 0, decimal("1.6e3"), true);
  with_error(1, 10, decimal("-1823771270000"), 0, decimal("4.8e5"), true);

  c.set({4, 3, 0}, {{1, 0}, 0, false});
  return c;
}

/// CSV "n,l,k,a,b,decimal,error": exact entries fill a and b, entries quoted
/// as decimals fill the decimal column (and b when a gamma part is exact).
inline void write_coefficients_csv(std::ostream& os, const InstantonCoefficients& c, int digits = 30) {
  os << "n,l,k,a,b,decimal,error\n";
  for (const auto& [idx, e] : c.entries()) {
    os << idx.n << ',' << idx.l << ',' << idx.k << ',';
    if (e.decimal) {
      os << ',' << (e.value.b != 0 ? to_string(e.value.b) : "") << ',' << BigReal(e.value.a, digits).to_string(digits);
    } else {
      os << to_string(e.value.a) << ',' << to_string(e.value.b) << ',';
    }
    os << ',' << (e.error == 0 ? std::string("0") : BigReal(e.error, 6).to_string(3)) << '\n';
  }
}

// ---------------------------------------------------------------------------

/// Dilute-gas splitting (1/sqrt(pi g)) e^{-1/6g}, as a level-shift magnitude.
inline BigReal one_instanton_splitting(const BigReal& g, int digits) {
  if (!(g > 0L)) throw std::domain_error("one_instanton_splitting: coupling must be positive");
  const int w = digits + 10;
  const BigReal gw = g.with_digits(w);
  return (exp(-1L / (6L * gw)) / sqrt(BigReal::pi(w) * gw)).with_digits(digits);
}

/// ln(-2/g) continued from g + i0 (upper) or g - i0 (lower).
inline BigComplex log_minus_two_over_g(const BigReal& g, Branch branch, int digits) {
  const BigReal pi = BigReal::pi(digits);
  return {log(2L / g.with_digits(digits)), branch == Branch::upper ? pi : -pi};
}

struct TwoInstantonEval {
  BigReal g;
  int K = 0;
  Branch branch = Branch::upper;
  BigComplex value;
  BigReal error;  // propagated from the quoted coefficient half-widths
};

/// (1/(pi g)) e^{-1/3g} sum_{l<=1} ln(-2/g)^l sum_{k<=K_l} eps_{2lk} g^k with
/// separate truncation orders for l = 0 and l = 1. K_l = -1 drops the channel.
inline TwoInstantonEval two_instanton_truncated(const BigReal& g, std::array<int, 2> orders, Branch branch,
                                                const InstantonCoefficients& coeffs, int digits) {
  if (!(g > 0L)) throw std::domain_error("two_instanton_truncated: coupling must be positive");
  if (orders[0] < -1 || orders[1] < -1) throw std::invalid_argument("two_instanton_truncated: K must be at least -1");
  const int w = digits + 10;
  const BigReal gw = g.with_digits(w);
  std::array<BigReal, 2> sums{BigReal(0L, w), BigReal(0L, w)};
  std::array<BigReal, 2> errs{BigReal(0L, w), BigReal(0L, w)};
  for (std::size_t l = 0; l <= 1; ++l) {
    BigReal gk(1L, w);
    for (int k = 0; k <= orders[l]; ++k) {
      const auto& e = coeffs.at({2, static_cast<int>(l), k});
      sums[l] += e.value.evaluate(w) * gk;
      errs[l] += BigReal(e.error, w) * gk;
      gk *= gw;
    }
  }
  const BigComplex lg = log_minus_two_over_g(gw, branch, w);
  const BigReal pref = exp(-1L / (3L * gw)) / (BigReal::pi(w) * gw);
  BigComplex v = BigComplex(sums[0]) + lg * sums[1];
  v *= pref;
  TwoInstantonEval out;
  out.g = g;
  out.K = std::max(orders[0], orders[1]);
  out.branch = branch;
  out.value = {v.re.with_digits(digits), v.im.with_digits(digits)};
  out.error = ((errs[0] + errs[1] * abs(lg)) * pref).with_digits(digits);
  return out;
}

/// Same truncation order K for both channels. K = -1 gives the empty sum.
inline TwoInstantonEval two_instanton_truncated(const BigReal& g, int K, Branch branch,
                                                const InstantonCoefficients& coeffs, int digits) {
  return two_instanton_truncated(g, std::array<int, 2>{K, K}, branch, coeffs, digits);
}

/// (e^{-1/6g}/sqrt(pi g))^4 ln^3(2/g): leading four-instanton term with eps_430 = 1.
inline BigReal n4_leading_bound(const BigReal& g, int digits) {
  if (!(g > 0L)) throw std::domain_error("n4_leading_bound: coupling must be positive");
  const int w = digits + 10;
  const BigReal gw = g.with_digits(w);
  const BigReal pi = BigReal::pi(w);
  const BigReal l = log(2L / gw);
  return (exp(-2L / (3L * gw)) / (pi * pi * gw * gw) * l * l * l).with_digits(digits);
}

/// Sign (-(-1)^N)^n of the n-instanton sector in level N, averaged over the
/// doublet N = 0, 1. Zero for odd n, so the mean energy has no odd sectors.
inline int doublet_mean_sign(int n) { return n % 2 == 0 ? 1 : 0; }

}  // namespace dwr
