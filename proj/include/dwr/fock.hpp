#pragma once

// Cut Fock space diagonalization of H = p^2/2 + x^2 (1 - sqrt(g) x)^2 / 2 in a
// harmonic-oscillator basis centred on the barrier top x = 1/(2 sqrt(g)).
// Eigenvalues are located by bisection on inertia counts of the banded
// LDL^T factorization of H - lambda I.

#include <dwr/numerics.hpp>

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

struct FockProblem {
  BigReal g;
  std::size_t cutoff = 0;  // M
  BigReal omega;           // basis frequency

  FockProblem(BigReal coupling, std::size_t m, int digits)
      : g(coupling.with_digits(digits)), cutoff(m), omega(1L, digits) {}
  FockProblem(BigReal coupling, std::size_t m, BigReal freq)
      : g(std::move(coupling)), cutoff(m), omega(std::move(freq)) {}

  BigReal center() const { return 1L / (2L * sqrt(g)); }
  BigReal barrier_height() const { return 1L / (32L * g); }
};

/// Potential of the double well at x.
inline BigReal double_well_potential(const BigReal& g, const BigReal& x) {
  const BigReal w = x * (1L - sqrt(g) * x);
  return w * w / 2L;
}

/// Same potential written in y = x - 1/(2 sqrt g): 1/(32g) - y^2/4 + g y^4/2.
inline BigReal shifted_potential(const BigReal& g, const BigReal& y) {
  const BigReal y2 = y * y;
  return 1L / (32L * g) - y2 / 4L + g * y2 * y2 / 2L;
}

/// Symmetric banded matrix stored by diagonal offset: band[d][i] = A(i, i+d).
class BandedSymmetricMatrix {
 public:
  BandedSymmetricMatrix(std::size_t dim, std::size_t half_bandwidth, int digits)
      : dim_(dim), band_(half_bandwidth + 1) {
    for (std::size_t d = 0; d <= half_bandwidth; ++d) band_[d].assign(dim > d ? dim - d : 0, BigReal(0L, digits));
  }

  std::size_t dimension() const { return dim_; }
  std::size_t half_bandwidth() const { return band_.size() - 1; }

  BigReal entry(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    const std::size_t d = j - i;
    if (d > half_bandwidth()) return BigReal(0L, band_[0].empty() ? 10 : band_[0][0].digits());
    return band_[d][i];
  }
  BigReal& at(std::size_t i, std::size_t d) { return band_.at(d).at(i); }
  const BigReal& at(std::size_t i, std::size_t d) const { return band_.at(d).at(i); }

  /// Rows/columns with index parity `parity`, in their natural order.
  BandedSymmetricMatrix parity_block(int parity) const {
    const std::size_t n = (dim_ + (parity == 0 ? 1 : 0)) / 2;
    const std::size_t hb = half_bandwidth() / 2;
    BandedSymmetricMatrix b(n, hb, band_[0].empty() ? 10 : band_[0][0].digits());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = 2 * i + static_cast<std::size_t>(parity);
      for (std::size_t d = 0; d <= hb && i + d < n; ++d) b.at(i, d) = band_[2 * d][r];
    }
    return b;
  }

  /// Lower bound on the spectrum (Gershgorin).
  BigReal gershgorin_lower() const;
  BigReal gershgorin_upper() const;

 private:
  std::size_t dim_;
  std::vector<std::vector<BigReal>> band_;
};

inline BigReal BandedSymmetricMatrix::gershgorin_lower() const {
  BigReal lo = band_[0].at(0);
  for (std::size_t i = 0; i < dim_; ++i) {
    BigReal r(0L, band_[0][i].digits());
    for (std::size_t d = 1; d <= half_bandwidth(); ++d) {
      if (i + d < dim_) r += abs(band_[d][i]);
      if (i >= d) r += abs(band_[d][i - d]);
    }
    lo = min(lo, band_[0][i] - r);
  }
  return lo;
}

inline BigReal BandedSymmetricMatrix::gershgorin_upper() const {
  BigReal hi = band_[0].at(0);
  for (std::size_t i = 0; i < dim_; ++i) {
    BigReal r(0L, band_[0][i].digits());
    for (std::size_t d = 1; d <= half_bandwidth(); ++d) {
      if (i + d < dim_) r += abs(band_[d][i]);
      if (i >= d) r += abs(band_[d][i - d]);
    }
    hi = max(hi, band_[0][i] + r);
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Ladder-operator matrix elements

/// <n + offset | (a + sign a^dagger)^power | n>, by expanding all words of
/// annihilation/creation operators. Each word contributes the square root of
/// the product of its ladder factors.
inline BigReal ladder_power_element(int power, int sign, std::size_t n, long offset, int digits) {
  BigReal total(0L, digits);
  const unsigned words = 1u << power;
  for (unsigned w = 0; w < words; ++w) {
    // bit set: creation operator; operators applied right to left
    long state = static_cast<long>(n);
    BigInteger weight = 1;
    int coeff = 1;
    bool dead = false;
    for (int k = 0; k < power && !dead; ++k) {
      if (w & (1u << k)) {
        weight *= static_cast<unsigned long>(state + 1);
        state += 1;
        coeff *= sign;
      } else {
        if (state == 0) {
          dead = true;
        } else {
          weight *= static_cast<unsigned long>(state);
          state -= 1;
        }
      }
    }
    if (dead || state != static_cast<long>(n) + offset) continue;
    BigReal amp = sqrt(BigReal(weight, digits));
    if (coeff < 0) amp = -amp;
    total += amp;
  }
  return total;
}

/// <m|X|n> with X = center + (a + a^dagger)/sqrt(2 omega).
inline BigReal position_element(const FockProblem& p, std::size_t m, std::size_t n) {
  const int digits = p.g.digits();
  const long offset = static_cast<long>(m) - static_cast<long>(n);
  BigReal v = ladder_power_element(1, 1, n, offset, digits) / sqrt(2L * p.omega);
  if (m == n) v += p.center();
  return v;
}

/// Matrix of p^2/2 + 1/(32g) - y^2/4 + g y^4/2 in the oscillator basis of
/// frequency omega, with y = (a + a^dagger)/sqrt(2 omega), p = i sqrt(omega/2)(a^dagger - a).
inline BandedSymmetricMatrix build_hamiltonian(const FockProblem& p, int digits) {
  if (p.cutoff < 2) throw std::invalid_argument("build_hamiltonian: cut-off must be at least 2");
  if (!(p.g > 0L)) throw std::domain_error("build_hamiltonian: coupling must be positive");
  const BigReal g = p.g.with_digits(digits), om = p.omega.with_digits(digits);
  const BigReal y2 = 1L / (2L * om);        // scale of y^2 in ladder units
  const BigReal y4 = y2 * y2;
  const BigReal p2 = -om / 2L;               // p^2 = -(omega/2) (a - a^dagger)^2
  const BigReal constant = 1L / (32L * g);

  BandedSymmetricMatrix h(p.cutoff, 4, digits);
  for (std::size_t n = 0; n < p.cutoff; ++n) {
    for (long d = 0; d <= 4 && n + static_cast<std::size_t>(d) < p.cutoff; ++d) {
      BigReal v(0L, digits);
      v += p2 / 2L * ladder_power_element(2, -1, n, d, digits);
      v -= y2 / 4L * ladder_power_element(2, 1, n, d, digits);
      v += g / 2L * y4 * ladder_power_element(4, 1, n, d, digits);
      if (d == 0) v += constant;
      h.at(n, static_cast<std::size_t>(d)) = std::move(v);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Inertia and bisection

class FactorizationBreakdown : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Number of eigenvalues strictly below lambda (negative pivots of the banded
/// LDL^T of A - lambda I). Throws FactorizationBreakdown on an exactly zero pivot.
inline std::size_t inertia_below(const BandedSymmetricMatrix& a, const BigReal& lambda) {
  const std::size_t n = a.dimension(), b = a.half_bandwidth();
  const int digits = lambda.digits();
  // l[i][k] = L(i, i-1-k), k < b
  std::vector<BigReal> dvals(n, BigReal(0L, digits));
  std::vector<std::vector<BigReal>> l(n, std::vector<BigReal>(b, BigReal(0L, digits)));
  std::size_t negatives = 0;
  BigReal tmp(0L, digits);
  for (std::size_t i = 0; i < n; ++i) {
    // L(i, j) for j in [i-b, i-1]
    for (std::size_t jj = (i >= b ? i - b : 0); jj < i; ++jj) {
      BigReal s = a.at(jj, i - jj);
      for (std::size_t kk = (i >= b ? i - b : 0); kk < jj; ++kk) {
        // L(i,kk) L(jj,kk) D(kk)
        if (jj - kk > b) continue;
        tmp = l[i][i - 1 - kk] * l[jj][jj - 1 - kk];
        tmp *= dvals[kk];
        s -= tmp;
      }
      l[i][i - 1 - jj] = s / dvals[jj];
    }
    BigReal di = a.at(i, 0) - lambda;
    for (std::size_t kk = (i >= b ? i - b : 0); kk < i; ++kk) {
      tmp = l[i][i - 1 - kk] * l[i][i - 1 - kk];
      tmp *= dvals[kk];
      di -= tmp;
    }
    if (di.is_zero()) throw FactorizationBreakdown("zero pivot at row " + std::to_string(i));
    if (di < 0L) ++negatives;
    dvals[i] = std::move(di);
  }
  return negatives;
}

/// Inertia count that nudges the shift away from an exact breakdown.
inline std::size_t robust_inertia_below(const BandedSymmetricMatrix& a, BigReal lambda) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return inertia_below(a, lambda);
    } catch (const FactorizationBreakdown&) {
      const BigReal scale = max(BigReal(1L, lambda.digits()), abs(lambda));
      lambda += scale * pow10(-lambda.digits() + 4 + attempt, lambda.digits());
    }
  }
  throw FactorizationBreakdown("persistent zero pivot near shift " + lambda.to_string(20));
}

struct CertifiedEigenvalue {
  BigReal value;  // midpoint of the final bracket
  BigReal lower;  // inertia_below(lower) <= index
  BigReal upper;  // inertia_below(upper) >= index + 1
};

/// The index-th smallest eigenvalue (0-based) to absolute accuracy 10^-digits.
inline CertifiedEigenvalue bisect_eigenvalue(const BandedSymmetricMatrix& a, std::size_t index, int digits,
                                             std::optional<std::pair<BigReal, BigReal>> bracket = std::nullopt) {
  if (index >= a.dimension()) throw std::out_of_range("bisect_eigenvalue: index exceeds matrix dimension");
  const int work = digits + kGuardDigits;
  BigReal lo = bracket ? bracket->first.with_digits(work) : a.gershgorin_lower().with_digits(work) - 1L;
  BigReal hi = bracket ? bracket->second.with_digits(work) : a.gershgorin_upper().with_digits(work) + 1L;
  const BigReal eps = pow10(-digits, work);
  while (hi - lo > eps) {
    BigReal mid = (lo + hi) / 2L;
    if (robust_inertia_below(a, mid) > index) {
      hi = std::move(mid);
    } else {
      lo = std::move(mid);
    }
  }
  BigReal mid = (lo + hi) / 2L;
  return {std::move(mid), std::move(lo), std::move(hi)};
}

/// The `count` smallest eigenvalues of a banded symmetric matrix.
inline std::vector<BigReal> lowest_eigenvalues(const BandedSymmetricMatrix& a, std::size_t count, int digits) {
  if (a.dimension() < count) throw std::invalid_argument("lowest_eigenvalues: matrix smaller than requested count");
  std::vector<BigReal> out;
  const int work = digits + kGuardDigits;
  BigReal lo = a.gershgorin_lower().with_digits(work) - 1L;
  const BigReal top = a.gershgorin_upper().with_digits(work) + 1L;
  for (std::size_t i = 0; i < count; ++i) {
    auto ev = bisect_eigenvalue(a, i, digits, std::make_pair(lo, top));
    lo = ev.lower;
    out.push_back(ev.value.with_digits(digits));
  }
  return out;
}

struct FockResult {
  BigReal g;
  std::size_t cutoff = 0;
  int digits = 0;
  BigReal e0, e1, mean;
};

/// E0 from the even-parity block, E1 from the odd block.
inline FockResult fock_energy(const BigReal& g, std::size_t cutoff, int digits, const BigReal* omega = nullptr) {
  const int work = digits + kGuardDigits;
  FockProblem prob = omega ? FockProblem(g.with_digits(work), cutoff, omega->with_digits(work))
                           : FockProblem(g.with_digits(work), cutoff, work);
  const BandedSymmetricMatrix h = build_hamiltonian(prob, work);
  const auto even = h.parity_block(0), odd = h.parity_block(1);
  FockResult r;
  r.g = g;
  r.cutoff = cutoff;
  r.digits = digits;
  r.e0 = bisect_eigenvalue(even, 0, digits).value;
  r.e1 = bisect_eigenvalue(odd, 0, digits).value;
  r.mean = ((r.e0 + r.e1) / 2L).with_digits(digits);
  r.e0 = r.e0.with_digits(digits);
  r.e1 = r.e1.with_digits(digits);
  return r;
}

/// Doubles the cut-off from `start` until the mean energy moves less than
/// 10^-digits; the returned result is the larger cut-off of the final pair.
inline FockResult fock_energy_converged(const BigReal& g, int digits, std::size_t start = 64,
                                        std::size_t max_cutoff = 1u << 14) {
  FockResult prev = fock_energy(g, start, digits);
  for (std::size_t m = 2 * start; m <= max_cutoff; m *= 2) {
    FockResult next = fock_energy(g, m, digits);
    if (abs(next.mean - prev.mean) < pow10(-digits, digits + 5)) return next;
    prev = std::move(next);
  }
  throw NumericalError("cut-off doubling did not converge below M = " + std::to_string(max_cutoff));
}

struct ScanRow {
  std::size_t cutoff = 0;
  std::vector<BigReal> eigenvalues;
};

/// Lowest `count` eigenvalues of H_M for each cut-off (ascending).
inline std::vector<ScanRow> convergence_scan(const BigReal& g, const std::vector<std::size_t>& cutoffs, std::size_t count,
                                             int digits) {
  for (std::size_t i = 1; i < cutoffs.size(); ++i) {
    if (cutoffs[i] <= cutoffs[i - 1]) throw std::invalid_argument("convergence_scan: cut-offs must ascend");
  }
  std::vector<ScanRow> rows;
  const int work = digits + kGuardDigits;
  for (std::size_t m : cutoffs) {
    const auto h = build_hamiltonian(FockProblem(g.with_digits(work), m, work), work);
    rows.push_back({m, lowest_eigenvalues(h, std::min(count, m), digits)});
  }
  return rows;
}

/// Number of eigenvalues of H_M strictly below the barrier top 1/(32g).
inline std::size_t count_below_barrier(const BigReal& g, std::size_t cutoff, int digits) {
  const int work = digits + kGuardDigits;
  const FockProblem prob(g.with_digits(work), cutoff, work);
  const auto h = build_hamiltonian(prob, work);
  return robust_inertia_below(h.parity_block(0), prob.barrier_height()) +
         robust_inertia_below(h.parity_block(1), prob.barrier_height());
}

}  // namespace dwr
