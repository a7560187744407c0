#pragma once

// Diagonal Pade approximants of power series. The exact variant solves the
// Hankel system by fraction-free (Bareiss) elimination over the integers; the
// numeric variant uses partial pivoting in BigReal.

#include <dwr/numerics.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

class PadeDegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// numerator(t) / denominator(t), coefficients in ascending powers,
/// denominator[0] == 1.
template <typename Scalar>
struct Pade {
  std::vector<Scalar> numerator;
  std::vector<Scalar> denominator;
  int degree_reductions = 0;   // how often the denominator degree was lowered
  std::optional<double> condition_estimate;  // numeric variant only

  std::size_t numerator_degree() const { return numerator.empty() ? 0 : numerator.size() - 1; }
  std::size_t denominator_degree() const { return denominator.empty() ? 0 : denominator.size() - 1; }
  std::size_t order() const { return numerator_degree() + denominator_degree(); }
};

using PadeApproximant = Pade<ExactRational>;
using NumericPade = Pade<BigReal>;

/// Complex-valued evaluator with coefficients frozen at a fixed precision.
class RationalFunction {
 public:
  RationalFunction(std::vector<BigReal> num, std::vector<BigReal> den)
      : num_(std::move(num)), den_(std::move(den)) {}

  static RationalFunction from(const PadeApproximant& p, int digits) {
    std::vector<BigReal> n, d;
    n.reserve(p.numerator.size());
    d.reserve(p.denominator.size());
    for (const auto& c : p.numerator) n.emplace_back(c, digits);
    for (const auto& c : p.denominator) d.emplace_back(c, digits);
    return {std::move(n), std::move(d)};
  }
  static RationalFunction from(const NumericPade& p, int digits) {
    std::vector<BigReal> n, d;
    for (const auto& c : p.numerator) n.push_back(c.with_digits(digits));
    for (const auto& c : p.denominator) d.push_back(c.with_digits(digits));
    return {std::move(n), std::move(d)};
  }

  BigComplex operator()(const BigComplex& t) const { return horner(num_, t) / horner(den_, t); }

  const std::vector<BigReal>& numerator() const { return num_; }
  const std::vector<BigReal>& denominator() const { return den_; }

 private:
  std::vector<BigReal> num_;
  std::vector<BigReal> den_;
};

namespace detail {

// Solves A x = rhs exactly for integer A, rhs by Bareiss elimination.
// Returns nullopt when A is singular.
inline std::optional<std::vector<ExactRational>> bareiss_solve(std::vector<std::vector<BigInteger>> a,
                                                               std::vector<BigInteger> rhs) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i].push_back(std::move(rhs[i]));
  BigInteger prev = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    while (piv < n && sgn(a[piv][k]) == 0) ++piv;
    if (piv == n) return std::nullopt;
    if (piv != k) std::swap(a[piv], a[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j <= n; ++j) {
        // a_ij = (a_kk a_ij - a_ik a_kj) / prev, exact division
        mpz_mul(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), a[k][k].get_mpz_t());
        mpz_submul(a[i][j].get_mpz_t(), a[i][k].get_mpz_t(), a[k][j].get_mpz_t());
        mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      a[i][k] = 0;
    }
    prev = a[k][k];
  }
  // Fraction-free back substitution: y_i = det * x_i is integral.
  const BigInteger& det = a[n - 1][n - 1];
  std::vector<BigInteger> y(n);
  for (std::size_t ii = n; ii-- > 0;) {
    BigInteger s = det * a[ii][n];
    for (std::size_t j = ii + 1; j < n; ++j) mpz_submul(s.get_mpz_t(), a[ii][j].get_mpz_t(), y[j].get_mpz_t());
    mpz_divexact(y[ii].get_mpz_t(), s.get_mpz_t(), a[ii][ii].get_mpz_t());
  }
  std::vector<ExactRational> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ExactRational(y[i], det);
    x[i].canonicalize();
  }
  return x;
}

template <typename Scalar>
std::vector<Scalar> pade_numerator(const std::vector<Scalar>& b, const std::vector<Scalar>& q, std::size_t m) {
  std::vector<Scalar> p;
  p.reserve(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    Scalar s = b[i];
    for (std::size_t j = 1; j < q.size() && j <= i; ++j) s += q[j] * b[i - j];
    p.push_back(std::move(s));
  }
  return p;
}

}  // namespace detail

/// [m/n] Pade approximant of the series b_0 + b_1 t + ... + b_{m+n} t^{m+n}.
/// A singular system lowers n by one and raises m by one, preserving the
/// order of contact.
inline PadeApproximant pade_exact(const std::vector<ExactRational>& b, std::size_t m, std::size_t n) {
  if (b.size() < m + n + 1) throw std::invalid_argument("pade_exact: not enough series coefficients");
  int reductions = 0;
  BigInteger common = 1;
  for (std::size_t k = 0; k <= m + n; ++k) {
    mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), b[k].get_den_mpz_t());
  }
  std::vector<BigInteger> scaled;
  scaled.reserve(m + n + 1);
  for (std::size_t k = 0; k <= m + n; ++k) scaled.push_back(b[k].get_num() * (common / b[k].get_den()));
  auto coeff = [&](long k) { return k < 0 ? BigInteger(0) : scaled[static_cast<std::size_t>(k)]; };

  while (n > 0) {
    // sum_{j=1..n} q_j b_{m+i-j} = -b_{m+i},  i = 1..n
    std::vector<std::vector<BigInteger>> a(n, std::vector<BigInteger>(n));
    std::vector<BigInteger> rhs(n);
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 1; j <= n; ++j) a[i - 1][j - 1] = coeff(static_cast<long>(m + i) - static_cast<long>(j));
      rhs[i - 1] = -coeff(static_cast<long>(m + i));
    }
    if (auto sol = detail::bareiss_solve(std::move(a), std::move(rhs))) {
      PadeApproximant p;
      p.denominator.reserve(n + 1);
      p.denominator.emplace_back(1);
      for (auto& x : *sol) p.denominator.push_back(std::move(x));
      p.numerator = detail::pade_numerator(b, p.denominator, m);
      p.degree_reductions = reductions;
      return p;
    }
    ++reductions;
    --n;
    ++m;
  }
  throw PadeDegenerateError("Pade system degenerate down to denominator degree 0");
}

/// Taylor coefficients of numerator/denominator through t^order (exact).
inline std::vector<ExactRational> taylor_coefficients(const PadeApproximant& p, std::size_t order) {
  std::vector<ExactRational> c(order + 1);
  for (std::size_t k = 0; k <= order; ++k) {
    ExactRational s = k < p.numerator.size() ? p.numerator[k] : ExactRational(0);
    for (std::size_t j = 1; j < p.denominator.size() && j <= k; ++j) s -= p.denominator[j] * c[k - j];
    c[k] = s / p.denominator[0];
  }
  return c;
}

/// [m/n] Pade approximant in floating point. Gaussian elimination with
/// partial pivoting; the condition estimate is ||A||_1 ||A^-1||_1 computed
/// from the explicit inverse.
inline NumericPade pade_numeric(const std::vector<BigReal>& b, std::size_t m, std::size_t n) {
  if (b.size() < m + n + 1) throw std::invalid_argument("pade_numeric: not enough series coefficients");
  if (b.empty()) throw std::invalid_argument("pade_numeric: empty series");
  const int digits = b.front().digits();
  int reductions = 0;
  auto coeff = [&](long k) { return k < 0 ? BigReal(0L, digits) : b[static_cast<std::size_t>(k)]; };

  while (n > 0) {
    std::vector<std::vector<BigReal>> a(n, std::vector<BigReal>(2 * n + 1, BigReal(0L, digits)));
    BigReal norm_a(0L, digits);
    for (std::size_t j = 1; j <= n; ++j) {
      BigReal col(0L, digits);
      for (std::size_t i = 1; i <= n; ++i) {
        a[i - 1][j - 1] = coeff(static_cast<long>(m + i) - static_cast<long>(j));
        col += abs(a[i - 1][j - 1]);
      }
      norm_a = max(norm_a, col);
    }
    for (std::size_t i = 1; i <= n; ++i) {
      a[i - 1][n] = -coeff(static_cast<long>(m + i));
      a[i - 1][n + i] = BigReal(1L, digits);
    }
    bool singular = false;
    for (std::size_t k = 0; k < n && !singular; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (abs(a[i][k]) > abs(a[piv][k])) piv = i;
      }
      if (a[piv][k].is_zero() || abs(a[piv][k]) <= norm_a * pow10(-(digits - 5), digits)) {
        singular = true;
        break;
      }
      std::swap(a[piv], a[k]);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == k || a[i][k].is_zero()) continue;
        const BigReal f = a[i][k] / a[k][k];
        for (std::size_t j = k; j <= 2 * n; ++j) a[i][j] -= f * a[k][j];
      }
    }
    if (!singular) {
      NumericPade p;
      p.denominator.emplace_back(1L, digits);
      BigReal norm_inv(0L, digits);
      for (std::size_t j = 0; j < n; ++j) {
        BigReal col(0L, digits);
        for (std::size_t i = 0; i < n; ++i) col += abs(a[i][n + 1 + j] / a[i][i]);
        norm_inv = max(norm_inv, col);
      }
      for (std::size_t i = 0; i < n; ++i) p.denominator.push_back(a[i][n] / a[i][i]);
      p.numerator = detail::pade_numerator(b, p.denominator, m);
      p.degree_reductions = reductions;
      p.condition_estimate = (norm_a * norm_inv).to_double();
      return p;
    }
    ++reductions;
    --n;
    ++m;
  }
  throw PadeDegenerateError("Pade system degenerate down to denominator degree 0");
}

}  // namespace dwr
