#pragma once

// Exact Rayleigh-Schroedinger coefficients of the double-well ground state
//   H = p^2/2 + x^2/2 - sqrt(g) x^3 + (g/2) x^4,   E(g) = sum_k eps_k g^k
// via the polynomial (Bender-Wu) recursion in lambda = sqrt(g).

#include <dwr/numerics.hpp>

#include <cstddef>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dwr {

class CapacityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct PerturbationSeries {
  std::vector<ExactRational> coeffs;  // eps_0 .. eps_K

  std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  const ExactRational& operator[](std::size_t k) const { return coeffs.at(k); }

  /// Leading `order + 1` coefficients; no recomputation.
  PerturbationSeries truncated(std::size_t order) const {
    if (order > this->order()) throw std::out_of_range("truncated: requested order exceeds available order");
    return {std::vector<ExactRational>(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(order) + 1)};
  }

  friend bool operator==(const PerturbationSeries&, const PerturbationSeries&) = default;
};

/// Polynomial with integer coefficients over one shared denominator.
struct ScaledPolynomial {
  std::vector<BigInteger> numerators;
  BigInteger denominator = 1;

  static ScaledPolynomial from(const std::vector<ExactRational>& c) {
    ScaledPolynomial out;
    for (const auto& q : c) mpz_lcm(out.denominator.get_mpz_t(), out.denominator.get_mpz_t(), q.get_den_mpz_t());
    out.numerators.reserve(c.size());
    for (const auto& q : c) out.numerators.push_back(q.get_num() * (out.denominator / q.get_den()));
    return out;
  }
};

/// Wavefunction corrections psi = exp(-x^2/2) sum_j lambda^j P_j(x); poly[j][i]
/// is the coefficient of x^i in P_j.
struct BenderWuState {
  std::vector<std::vector<ExactRational>> poly;
  std::vector<ScaledPolynomial> scaled;  // poly[j] over a common denominator
  std::vector<ExactRational> energy;     // coefficient of lambda^m
  ExactRational normalization = 0;    // constant term of P_j, j >= 1

  std::size_t order() const { return poly.empty() ? 0 : poly.size() - 1; }
};

namespace detail {

// One step of the recursion: appends P_j and the lambda^j energy term.
//   -P_j''/2 + x P_j' = x^3 P_{j-1} - x^4 P_{j-2}/2 + sum_{m>=1} E_m P_{j-m}
inline void bender_wu_step(BenderWuState& st) {
  const std::size_t j = st.poly.size();
  const std::size_t deg = 3 * j;
  std::vector<ExactRational> rhs(deg + 1);

  for (std::size_t i = 0; i < st.poly[j - 1].size(); ++i) rhs[i + 3] += st.poly[j - 1][i];
  if (j >= 2) {
    for (std::size_t i = 0; i < st.poly[j - 2].size(); ++i) {
      if (sgn(st.poly[j - 2][i]) != 0) rhs[i + 4] -= st.poly[j - 2][i] / 2;
    }
  }
  // m = j (times P_0 = 1) is the unknown; handled through the solvability condition.
  // The convolution runs in integers over a common denominator.
  BigInteger common = 1;
  for (std::size_t m = 1; m < j; ++m) {
    if (sgn(st.energy[m]) == 0) continue;
    BigInteger d = st.energy[m].get_den() * st.scaled[j - m].denominator;
    mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), d.get_mpz_t());
  }
  std::vector<BigInteger> acc(deg + 1);
  BigInteger factor;
  for (std::size_t m = 1; m < j; ++m) {
    const ExactRational& e = st.energy[m];
    if (sgn(e) == 0) continue;
    const auto& p = st.scaled[j - m];
    factor = common / (e.get_den() * p.denominator) * e.get_num();
    for (std::size_t i = 0; i < p.numerators.size(); ++i) {
      if (sgn(p.numerators[i]) == 0) continue;
      mpz_addmul(acc[i].get_mpz_t(), factor.get_mpz_t(), p.numerators[i].get_mpz_t());
    }
  }
  for (std::size_t i = 0; i <= deg; ++i) {
    if (sgn(acc[i]) == 0) continue;
    ExactRational q(acc[i], common);
    q.canonicalize();
    rhs[i] += q;
  }

  std::vector<ExactRational> c(deg + 1);
  for (std::size_t n = deg; n >= 1; --n) {
    ExactRational v = rhs[n];
    if (n + 2 <= deg && sgn(c[n + 2]) != 0) v += ExactRational((n + 2) * (n + 1) / 2) * c[n + 2];
    if (sgn(v) != 0) c[n] = v / ExactRational(static_cast<unsigned long>(n));
  }
  c[0] = st.normalization;
  ExactRational e_j = -rhs[0] - (deg >= 2 ? c[2] : ExactRational(0));

  if (j % 2 == 1 && sgn(e_j) != 0) {
    throw NumericalError("odd-order energy correction did not vanish at lambda^" + std::to_string(j));
  }
  st.scaled.push_back(ScaledPolynomial::from(c));
  st.poly.push_back(std::move(c));
  st.energy.push_back(std::move(e_j));
}

}  // namespace detail

inline BenderWuState bender_wu_start(const ExactRational& normalization = 0) {
  BenderWuState st;
  st.poly.push_back({ExactRational(1)});
  st.scaled.push_back(ScaledPolynomial::from(st.poly.back()));
  st.energy.push_back(ExactRational(1, 2));
  st.normalization = normalization;
  return st;
}

/// Advances the recursion until eps_K (lambda^{2K}) is known.
inline void bender_wu_extend(BenderWuState& st, std::size_t K) {
  while (st.poly.size() < 2 * K + 1) {
    try {
      detail::bender_wu_step(st);
    } catch (const std::bad_alloc&) {
      throw CapacityError("out of memory at perturbative order lambda^" + std::to_string(st.poly.size()));
    }
  }
}

inline PerturbationSeries series_from_state(const BenderWuState& st, std::size_t K) {
  PerturbationSeries s;
  s.coeffs.reserve(K + 1);
  for (std::size_t k = 0; k <= K; ++k) s.coeffs.push_back(st.energy.at(2 * k));
  return s;
}

inline PerturbationSeries compute_rs_coefficients(std::size_t K, const ExactRational& normalization = 0) {
  BenderWuState st = bender_wu_start(normalization);
  bender_wu_extend(st, K);
  return series_from_state(st, K);
}

/// eps_k / (-k! 3^k 3/pi), the ratio to the large-order prediction.
inline BigReal asymptotic_ratio(const PerturbationSeries& series, std::size_t k, int digits = 30) {
  if (k < 1 || k > series.order()) throw std::out_of_range("asymptotic_ratio: index out of range");
  BigInteger fact, pow3;
  mpz_fac_ui(fact.get_mpz_t(), k);
  mpz_ui_pow_ui(pow3.get_mpz_t(), 3, k);
  const ExactRational scaled = series[k] / ExactRational(fact * pow3 * 3);
  // eps_k / (-(3/pi) k! 3^k) = -pi * eps_k / (3 k! 3^k)
  return -(BigReal::pi(digits + 10) * BigReal(scaled, digits + 10)).with_digits(digits);
}

/// Plain-text cache: one "k<TAB>num/den" line per coefficient, ascending k.
inline void save_series(const PerturbationSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) out << k << '\t' << to_string(s.coeffs[k]) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Loads a cache file. With `order` set, returns the truncated view; a cache
/// shorter than the request is a warning and the available prefix is returned.
inline PerturbationSeries load_series(const std::string& path, std::optional<std::size_t> order = std::nullopt,
                                      std::ostream* warn = &std::cerr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  PerturbationSeries s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path, lineno, "expected 'k<TAB>num/den'");
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("index");
      if (k != s.coeffs.size()) throw ParseError(path, lineno, "index " + std::to_string(k) + " out of sequence");
      s.coeffs.push_back(parse_rational(line.substr(tab + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path, lineno, std::string("malformed entry: ") + e.what());
    }
  }
  if (order) {
    if (*order > s.order() || s.coeffs.empty()) {
      if (warn) *warn << "warning: cache '" << path << "' has order " << s.order() << ", requested " << *order << '\n';
      return s;
    }
    return s.truncated(*order);
  }
  return s;
}

}  // namespace dwr
