#pragma once

// Scalar tower: exact rationals (GMP), precision-tagged reals (MPFR) and
// complexes built on them. Precision is always stated in decimal digits.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dwr {

using ExactRational = mpq_class;
using BigInteger = mpz_class;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum number of guard digits added on top of any requested target.
inline constexpr int kGuardDigits = 20;

inline mpfr_prec_t digits_to_bits(int digits) {
  // log2(10) = 3.3219...; a few spare bits so that `digits` survive rounding.
  return static_cast<mpfr_prec_t>(std::ceil(digits * 3.321928094887362)) + 8;
}

inline int bits_to_digits(mpfr_prec_t bits) {
  return std::max(1, static_cast<int>(std::floor((bits - 8) * 0.30102999566398120)));
}

/// Arbitrary precision real. Every value carries its own precision; binary
/// operations round to the larger of the two operand precisions.
class BigReal {
 public:
  static constexpr int kDefaultDigits = 30;

  BigReal() : BigReal(0L, kDefaultDigits) {}
  BigReal(long v, int digits) { init(digits); mpfr_set_si(v_, v, MPFR_RNDN); }
  BigReal(int v, int digits) : BigReal(static_cast<long>(v), digits) {}
  BigReal(double v, int digits) { init(digits); mpfr_set_d(v_, v, MPFR_RNDN); }
  BigReal(const ExactRational& q, int digits) { init(digits); mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }
  BigReal(const BigInteger& z, int digits) { init(digits); mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }

  BigReal(const BigReal& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
  BigReal(BigReal&& o) noexcept {
    // Leave the source as a valid minimal-precision zero.
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  BigReal& operator=(const BigReal& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  BigReal& operator=(BigReal&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigReal() { mpfr_clear(v_); }

  /// Parses decimal or scientific notation ("1.5e-3", "-2", "inf" is rejected).
  static BigReal parse(std::string_view text, int digits) {
    BigReal r(0L, digits);
    std::string s(text);
    char* end = nullptr;
    if (s.empty()) throw std::invalid_argument("empty number");
    mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
    if (end == s.c_str() || *end != '\0' || !mpfr_number_p(r.v_)) {
      throw std::invalid_argument("not a decimal number: '" + s + "'");
    }
    return r;
  }

  static BigReal pi(int digits) { BigReal r(0L, digits); mpfr_const_pi(r.v_, MPFR_RNDN); return r; }
  static BigReal euler_gamma(int digits) { BigReal r(0L, digits); mpfr_const_euler(r.v_, MPFR_RNDN); return r; }
  static BigReal log2(int digits) { BigReal r(0L, digits); mpfr_const_log2(r.v_, MPFR_RNDN); return r; }

  int digits() const { return bits_to_digits(mpfr_get_prec(v_)); }
  mpfr_prec_t bits() const { return mpfr_get_prec(v_); }

  /// Same value rounded to a new precision.
  BigReal with_digits(int digits) const {
    BigReal r(0L, digits);
    mpfr_set(r.v_, v_, MPFR_RNDN);
    return r;
  }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long exponent10() const;  // floor(log10|x|); undefined for zero
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  /// Scientific notation with all stored digits, e.g. "-4.45e+1".
  std::string to_string() const { return to_string(digits()); }
  std::string to_string(int shown_digits) const {
    if (mpfr_zero_p(v_)) return "0";
    if (mpfr_nan_p(v_)) return "nan";
    if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
    mpfr_exp_t exp10 = 0;
    char* raw = mpfr_get_str(nullptr, &exp10, 10, static_cast<size_t>(std::max(1, shown_digits)), v_, MPFR_RNDN);
    std::string mant(raw);
    mpfr_free_str(raw);
    std::string sign;
    if (!mant.empty() && mant[0] == '-') {
      sign = "-";
      mant.erase(0, 1);
    }
    // mpfr gives 0.d1d2... * 10^exp10; rewrite as d1.d2... e(exp10-1)
    std::string out = sign + mant.substr(0, 1);
    if (mant.size() > 1) out += "." + mant.substr(1);
    out += "e" + std::string(exp10 - 1 >= 0 ? "+" : "-") + std::to_string(std::labs(exp10 - 1));
    return out;
  }

  /// Fixed-point notation with `decimals` digits after the point.
  std::string to_fixed(int decimals) const {
    char* raw = nullptr;
    std::string fmt = "%." + std::to_string(decimals) + "Rf";
    mpfr_asprintf(&raw, fmt.c_str(), v_);
    std::string out(raw);
    mpfr_free_str(raw);
    return out;
  }

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

  BigReal& operator+=(const BigReal& o) { grow(o); mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
  BigReal& operator-=(const BigReal& o) { grow(o); mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
  BigReal& operator*=(const BigReal& o) { grow(o); mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
  BigReal& operator/=(const BigReal& o) { grow(o); mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }
  BigReal& operator*=(long s) { mpfr_mul_si(v_, v_, s, MPFR_RNDN); return *this; }
  BigReal& operator/=(long s) { mpfr_div_si(v_, v_, s, MPFR_RNDN); return *this; }
  BigReal& operator+=(long s) { mpfr_add_si(v_, v_, s, MPFR_RNDN); return *this; }
  BigReal& operator-=(long s) { mpfr_sub_si(v_, v_, s, MPFR_RNDN); return *this; }

  BigReal operator-() const { BigReal r(*this); mpfr_neg(r.v_, r.v_, MPFR_RNDN); return r; }

  friend BigReal operator+(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_add); }
  friend BigReal operator-(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_sub); }
  friend BigReal operator*(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_mul); }
  friend BigReal operator/(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_div); }
  friend BigReal operator+(BigReal a, long s) { return a += s; }
  friend BigReal operator-(BigReal a, long s) { return a -= s; }
  friend BigReal operator*(BigReal a, long s) { return a *= s; }
  friend BigReal operator/(BigReal a, long s) { return a /= s; }
  friend BigReal operator*(long s, BigReal a) { return a *= s; }
  friend BigReal operator+(long s, BigReal a) { return a += s; }
  friend BigReal operator-(long s, const BigReal& a) { BigReal r(a); mpfr_si_sub(r.v_, s, a.v_, MPFR_RNDN); return r; }
  friend BigReal operator/(long s, const BigReal& a) { BigReal r(a); mpfr_si_div(r.v_, s, a.v_, MPFR_RNDN); return r; }

  friend bool operator==(const BigReal& a, const BigReal& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const BigReal& a, const BigReal& b) {
    if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
    const int c = mpfr_cmp(a.v_, b.v_);
    return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
  }
  friend bool operator==(const BigReal& a, long s) { return mpfr_cmp_si(a.v_, s) == 0; }
  friend std::partial_ordering operator<=>(const BigReal& a, long s) {
    const int c = mpfr_cmp_si(a.v_, s);
    return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
  }

  friend std::ostream& operator<<(std::ostream& os, const BigReal& x) { return os << x.to_string(); }

  template <typename F>
  BigReal unary(F f) const {
    BigReal r(0L, digits());
    mpfr_set_prec(r.v_, mpfr_get_prec(v_));
    f(r.v_, v_, MPFR_RNDN);
    return r;
  }

 private:
  void init(int digits) {
    if (digits < 1) throw std::invalid_argument("precision must be at least one digit");
    mpfr_init2(v_, digits_to_bits(digits));
  }
  void grow(const BigReal& o) {
    if (mpfr_get_prec(o.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(o.v_), MPFR_RNDN);
  }
  template <typename Op>
  static BigReal binary(const BigReal& a, const BigReal& b, Op op) {
    BigReal r(0L, 1);
    mpfr_set_prec(r.v_, std::max(mpfr_get_prec(a.v_), mpfr_get_prec(b.v_)));
    op(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }

  mpfr_t v_;
};

inline long BigReal::exponent10() const {
  if (is_zero()) throw std::domain_error("exponent10 of zero");
  mpfr_t t;
  mpfr_init2(t, 64);
  mpfr_abs(t, v_, MPFR_RNDN);
  mpfr_log10(t, t, MPFR_RNDN);
  mpfr_floor(t, t);
  const long e = mpfr_get_si(t, MPFR_RNDN);
  mpfr_clear(t);
  return e;
}

inline BigReal abs(const BigReal& x) { return x.unary(mpfr_abs); }
inline BigReal sqrt(const BigReal& x) { return x.unary(mpfr_sqrt); }
inline BigReal exp(const BigReal& x) { return x.unary(mpfr_exp); }
inline BigReal log(const BigReal& x) { return x.unary(mpfr_log); }
inline BigReal sin(const BigReal& x) { return x.unary(mpfr_sin); }
inline BigReal cos(const BigReal& x) { return x.unary(mpfr_cos); }
inline BigReal floor(const BigReal& x) {
  return x.unary([](mpfr_ptr r, mpfr_srcptr a, mpfr_rnd_t) { return mpfr_floor(r, a); });
}
inline BigReal pow(const BigReal& x, long n) {
  return x.unary([n](mpfr_ptr r, mpfr_srcptr a, mpfr_rnd_t rnd) { return mpfr_pow_si(r, a, n, rnd); });
}
inline BigReal atan2(const BigReal& y, const BigReal& x) {
  BigReal r = y.with_digits(std::max(y.digits(), x.digits()));
  mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
  return r;
}
inline BigReal max(const BigReal& a, const BigReal& b) { return a < b ? b : a; }
inline BigReal min(const BigReal& a, const BigReal& b) { return b < a ? b : a; }

/// Ten to an integer power at the given precision.
inline BigReal pow10(long e, int digits) {
  BigReal r(10L, digits);
  mpfr_pow_si(r.raw(), r.raw(), e, MPFR_RNDN);
  return r;
}

/// Complex number over BigReal with a shared precision.
struct BigComplex {
  BigReal re;
  BigReal im;

  BigComplex() = default;
  explicit BigComplex(BigReal r) : re(std::move(r)), im(0L, re.digits()) {}
  BigComplex(BigReal r, BigReal i) : re(std::move(r)), im(std::move(i)) {}

  static BigComplex polar(const BigReal& modulus, const BigReal& angle) {
    return {modulus * cos(angle), modulus * sin(angle)};
  }

  int digits() const { return std::max(re.digits(), im.digits()); }

  BigComplex& operator+=(const BigComplex& o) { re += o.re; im += o.im; return *this; }
  BigComplex& operator-=(const BigComplex& o) { re -= o.re; im -= o.im; return *this; }
  BigComplex& operator*=(const BigComplex& o) {
    BigReal r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  BigComplex& operator*=(const BigReal& s) { re *= s; im *= s; return *this; }
  BigComplex& operator/=(const BigComplex& o) {
    const BigReal den = o.re * o.re + o.im * o.im;
    BigReal r = (re * o.re + im * o.im) / den;
    im = (im * o.re - re * o.im) / den;
    re = std::move(r);
    return *this;
  }
  BigComplex& operator/=(const BigReal& s) { re /= s; im /= s; return *this; }

  BigComplex operator-() const { return {-re, -im}; }
  friend BigComplex operator+(BigComplex a, const BigComplex& b) { return a += b; }
  friend BigComplex operator-(BigComplex a, const BigComplex& b) { return a -= b; }
  friend BigComplex operator*(BigComplex a, const BigComplex& b) { return a *= b; }
  friend BigComplex operator/(BigComplex a, const BigComplex& b) { return a /= b; }
  friend BigComplex operator*(BigComplex a, const BigReal& s) { return a *= s; }
  friend BigComplex operator*(const BigReal& s, BigComplex a) { return a *= s; }
  friend BigComplex operator/(BigComplex a, const BigReal& s) { return a /= s; }
  friend bool operator==(const BigComplex& a, const BigComplex& b) { return a.re == b.re && a.im == b.im; }
};

inline BigComplex conj(const BigComplex& z) { return {z.re, -z.im}; }
inline BigReal norm(const BigComplex& z) { return z.re * z.re + z.im * z.im; }
inline BigReal abs(const BigComplex& z) {
  BigReal r = z.re.with_digits(z.digits());
  mpfr_hypot(r.raw(), z.re.raw(), z.im.raw(), MPFR_RNDN);
  return r;
}
inline BigReal arg(const BigComplex& z) { return atan2(z.im, z.re); }
inline BigComplex exp(const BigComplex& z) { return BigComplex::polar(exp(z.re), z.im); }
inline BigComplex log(const BigComplex& z) { return {log(abs(z)), arg(z)}; }

/// Evaluates sum_k c_k t^k (ascending coefficients) at complex t.
inline BigComplex horner(const std::vector<BigReal>& c, const BigComplex& t) {
  const int d = c.empty() ? t.digits() : std::max(t.digits(), c.back().digits());
  BigComplex acc{BigReal(0L, d), BigReal(0L, d)};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc *= t;
    acc.re += *it;
  }
  return acc;
}

/// Working precision needed to resolve terms of size e^{-1/(3g)} against O(1)
/// quantities with `target_digits` significant digits left over.
inline int required_digits(const BigReal& g, int target_digits) {
  if (!(g > 0L)) throw std::domain_error("required_digits: coupling must be positive");
  if (target_digits < 1) throw std::domain_error("required_digits: target must be positive");
  const BigReal inv = BigReal(1L, 30) / (BigReal(3L, 30) * g.with_digits(30));
  const long exp_digits = static_cast<long>(std::ceil(0.434 * inv.to_double()));
  return static_cast<int>(target_digits + exp_digits + kGuardDigits);
}

inline BigReal rational_to_big(const ExactRational& x, int digits) {
  if (digits < 1) throw std::domain_error("rational_to_big: digits must be positive");
  return BigReal(x, digits);
}

/// "num/den", or "num" when the denominator is one.
inline std::string to_string(const ExactRational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline ExactRational parse_rational(std::string_view text) {
  std::string s(text);
  const auto slash = s.find('/');
  BigInteger num, den(1);
  auto parse_int = [](const std::string& part, BigInteger& out) {
    if (part.empty() || out.set_str(part, 10) != 0) throw std::invalid_argument("malformed integer '" + part + "'");
    if (part.find_first_not_of("+-0123456789") != std::string::npos) {
      throw std::invalid_argument("malformed integer '" + part + "'");
    }
  };
  if (slash == std::string::npos) {
    parse_int(s, num);
  } else {
    parse_int(s.substr(0, slash), num);
    parse_int(s.substr(slash + 1), den);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
  }
  ExactRational q(num, den);
  q.canonicalize();
  return q;
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
inline ExactRational best_rational(const BigReal& x, const BigInteger& max_den) {
  BigReal rest = x;
  BigInteger p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int iter = 0; iter < 100000; ++iter) {
    const BigReal fl = floor(rest);
    mpz_class a;
    mpfr_get_z(a.get_mpz_t(), fl.raw(), MPFR_RNDN);
    const BigInteger q2 = a * q1 + q0;
    if (q2 > max_den) {
      const BigInteger t = (max_den - q0) / q1;
      const ExactRational semi(t * p1 + p0, t * q1 + q0);
      const ExactRational conv(p1, q1);
      // pick whichever is closer to x
      const BigReal ds = abs(BigReal(semi, x.digits()) - x);
      const BigReal dc = abs(BigReal(conv, x.digits()) - x);
      ExactRational out = ds < dc ? semi : conv;
      out.canonicalize();
      return out;
    }
    const BigInteger p2 = a * p1 + p0;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const BigReal frac = rest - fl;
    if (frac.is_zero()) break;
    rest = BigReal(1L, x.digits()) / frac;
  }
  ExactRational out(p1, q1);
  out.canonicalize();
  return out;
}

}  // namespace dwr
