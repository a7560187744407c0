#pragma once

#include <dwr/numerics.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace dwr::test {

// fixed seed: every property run is reproducible
inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240521);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

/// Uniform in log between lo and hi.
inline double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

inline ::testing::AssertionResult near_rel(const BigReal& a, const BigReal& b, const BigReal& tol) {
  const BigReal scale = max(abs(b), BigReal(1e-300, a.digits()));
  const BigReal rel = abs(a - b) / scale;
  if (rel <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << a.to_string(25) << " vs " << b.to_string(25) << ", relative "
                                       << rel.to_string(4) << " > " << tol.to_string(4);
}

inline ::testing::AssertionResult near_abs(const BigReal& a, const BigReal& b, const BigReal& tol) {
  const BigReal d = abs(a - b);
  if (d <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << a.to_string(25) << " vs " << b.to_string(25) << ", difference "
                                       << d.to_string(4) << " > " << tol.to_string(4);
}

/// Cyclic Jacobi on a dense symmetric matrix; returns the sorted eigenvalues.
inline std::vector<BigReal> jacobi_eigenvalues(std::vector<std::vector<BigReal>> a, int digits) {
  const std::size_t n = a.size();
  const BigReal tol = pow10(-digits - 5, digits + 20);
  for (int sweep = 0; sweep < 100; ++sweep) {
    BigReal off(0L, digits + 20);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < tol * tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q].is_zero()) continue;
        const BigReal theta = (a[q][q] - a[p][p]) / (2L * a[p][q]);
        const BigReal t = BigReal(theta.sign() >= 0 ? 1L : -1L, digits + 20) /
                          (abs(theta) + sqrt(theta * theta + 1L));
        const BigReal c = 1L / sqrt(t * t + 1L), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const BigReal akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const BigReal apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<BigReal> ev;
  for (std::size_t i = 0; i < n; ++i) ev.push_back(a[i][i]);
  std::sort(ev.begin(), ev.end(), [](const BigReal& x, const BigReal& y) { return x < y; });
  return ev;
}

}  // namespace dwr::test
