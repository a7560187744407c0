#pragma once

// Simultaneous polynomial root finding (Aberth-Ehrlich) in arbitrary precision.

#include <dwr/numerics.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace dwr {

class RootFindingError : public NumericalError {
 public:
  RootFindingError(const std::string& what, std::vector<BigComplex> partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const std::vector<BigComplex>& partial() const { return partial_; }

 private:
  std::vector<BigComplex> partial_;
};

struct RootOptions {
  int max_iterations = 400;
  int restarts = 3;
  std::uint64_t seed = 20140217;
};

namespace detail {

// log|x| in double without overflow.
inline double log_abs(const BigReal& x) {
  if (x.is_zero()) return -INFINITY;
  long e = 0;
  const double m = mpfr_get_d_2exp(&e, x.raw(), MPFR_RNDN);
  return std::log(std::fabs(m)) + static_cast<double>(e) * std::numbers::ln2;
}

// Starting points from the upper convex hull of (k, log|c_k|) (Bini's rule).
inline std::vector<BigComplex> newton_polygon_start(const std::vector<BigReal>& c, int digits, double phase) {
  const std::size_t n = c.size() - 1;
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k <= n; ++k) {
    if (c[k].is_zero()) continue;
    const double y = log_abs(c[k]);
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double ya = log_abs(c[a]), yb = log_abs(c[b]);
      // drop b if it lies on or below segment a-k
      if ((yb - ya) * static_cast<double>(k - a) <= (y - ya) * static_cast<double>(b - a)) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }
  std::vector<BigComplex> z;
  z.reserve(n);
  const double two_pi = 2 * std::numbers::pi;
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t a = hull[h], b = hull[h + 1];
    const std::size_t cnt = b - a;
    const double log_r = (log_abs(c[a]) - log_abs(c[b])) / static_cast<double>(cnt);
    const BigReal radius = exp(BigReal(log_r, digits));
    for (std::size_t j = 0; j < cnt; ++j) {
      const double ang = two_pi * static_cast<double>(j) / static_cast<double>(cnt) + two_pi * static_cast<double>(h) /
                         static_cast<double>(n) + phase;
      z.push_back(BigComplex::polar(radius, BigReal(ang, digits)));
    }
  }
  return z;
}

}  // namespace detail

/// sum_k |c_k| r^k, the scale of rounding errors when evaluating at |z| = r.
inline BigReal horner_bound(const std::vector<BigReal>& c, const BigReal& r) {
  BigReal acc(0L, r.digits());
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * r + abs(*it);
  return acc;
}

/// All complex roots of sum_k c_k z^k (ascending coefficients, real).
/// Exactly-zero leading coefficients lower the degree. Roots whose imaginary
/// part is below the working tolerance are returned as exactly real.
inline std::vector<BigComplex> polynomial_roots(std::vector<BigReal> c, int digits, const RootOptions& opt = {}) {
  while (!c.empty() && c.back().is_zero()) c.pop_back();
  if (c.size() < 2) return {};
  for (auto& x : c) x = x.with_digits(digits);
  const std::size_t n = c.size() - 1;
  std::vector<BigReal> dc;
  for (std::size_t k = 1; k <= n; ++k) dc.push_back(c[k] * static_cast<long>(k));

  const BigReal tol = pow10(-digits + 3, digits);
  const BigReal noise_level = pow10(-digits + 1, digits) * static_cast<long>(4 * n);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<BigComplex> z = detail::newton_polygon_start(c, digits, 0.4);

  for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
    std::vector<bool> done(n, false);
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      std::size_t active = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        const BigComplex p = horner(c, z[i]);
        const BigComplex dp = horner(dc, z[i]);
        // Stop once |p(z)| is at the rounding level of its own evaluation.
        const BigReal noise = horner_bound(c, abs(z[i])) * noise_level;
        if (abs(p) <= noise) {
          done[i] = true;
          continue;
        }
        const BigComplex ratio = p / dp;
        BigComplex s{BigReal(0L, digits), BigReal(0L, digits)};
        const BigComplex one{BigReal(1L, digits), BigReal(0L, digits)};
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) s += one / (z[i] - z[j]);
        }
        const BigComplex w = ratio / (one - ratio * s);
        z[i] -= w;
        const BigReal scale = max(BigReal(1L, digits), abs(z[i]));
        if (abs(w) <= tol * scale) {
          done[i] = true;
        } else {
          ++active;
        }
      }
      if (active == 0) {
        for (auto& r : z) {
          if (abs(r.im) <= pow10(-digits / 2, digits) * max(BigReal(1L, digits), abs(r.re))) {
            r.im = BigReal(0L, digits);
          }
        }
        return z;
      }
    }
    // restart from jittered positions
    for (auto& r : z) {
      const BigReal f(1.0 + 1e-3 * (jitter(rng) - 0.5), digits);
      r = BigComplex(r.re * f, r.im * f + BigReal(1e-6 * (jitter(rng) - 0.5), digits));
    }
  }
  throw RootFindingError("Aberth iteration did not converge within " + std::to_string(opt.max_iterations) +
                             " iterations", z);
}

}  // namespace dwr
