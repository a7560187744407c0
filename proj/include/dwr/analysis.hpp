#pragma once

// Residuals between the Borel-resummed perturbative energy, the two-instanton
// sector and the cut-Fock energy; power-law fits of the residuals; and
// least-squares extraction of higher two-instanton coefficients.

#include <dwr/borel.hpp>
#include <dwr/fock.hpp>
#include <dwr/instanton.hpp>
#include <dwr/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dwr {

class BranchMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FitError : public NumericalError {
 public:
  explicit FitError(const std::string& what, std::optional<double> condition = std::nullopt)
      : NumericalError(what), condition_(condition) {}
  std::optional<double> condition_estimate() const { return condition_; }

 private:
  std::optional<double> condition_;
};

/// (1/g) e^{-1/3g}: leading imaginary part of the two-instanton sector.
inline BigReal imaginary_scale(const BigReal& g, int digits) {
  const BigReal gw = g.with_digits(digits);
  return exp(-1L / (3L * gw)) / gw;
}

/// (1/(pi g)) e^{-1/3g} ln(2/g): leading real part of the two-instanton sector.
inline BigReal real_scale(const BigReal& g, int digits) {
  const BigReal gw = g.with_digits(digits);
  return exp(-1L / (3L * gw)) / (BigReal::pi(digits) * gw) * log(2L / gw);
}

/// n log-spaced points from lo to hi inclusive.
inline std::vector<BigReal> log_grid(const BigReal& lo, const BigReal& hi, std::size_t n, int digits) {
  if (n < 2) throw std::invalid_argument("log_grid: need at least two points");
  if (!(lo > 0L) || !(hi > lo)) throw std::invalid_argument("log_grid: need 0 < lo < hi");
  std::vector<BigReal> out;
  const BigReal a = log(lo.with_digits(digits)), b = log(hi.with_digits(digits));
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(exp(a + (b - a) * static_cast<long>(i) / static_cast<long>(n - 1)));
  }
  out.front() = lo.with_digits(digits);
  out.back() = hi.with_digits(digits);
  return out;
}

struct DeltaRecord {
  BigReal g;
  int K = 0;
  BigReal delta_I;
  std::optional<BigReal> delta_R;
  BigReal delta_I_error;                 // absolute, from the inputs
  std::optional<BigReal> delta_R_error;
  int borel_digits = 0;
  std::optional<std::size_t> fock_cutoff;
  std::optional<int> fock_digits;
};

/// Branch-tagged lateral Borel sum of the perturbative series.
struct BorelEnergy {
  BigComplex value;
  Branch branch = Branch::upper;
  int digits = 0;
  BigReal error;  // absolute
};

inline BorelEnergy make_borel_energy(const LateralSum& s, Branch branch) {
  BorelEnergy e;
  e.value = s.value;
  e.branch = branch;
  e.digits = s.digits;
  const BigReal mag = abs(s.value);
  e.error = mag * BigReal(std::max(s.quad_tol_achieved, 0.0), s.digits) + mag * pow10(-s.digits, s.digits);
  return e;
}

inline DeltaRecord compute_delta(const BigReal& g, int K, const BorelEnergy& e_borel, const TwoInstantonEval& e2,
                                 const std::optional<FockResult>& e_fock, int digits) {
  if (e_borel.branch != e2.branch) {
    throw BranchMismatchError(std::string("Borel sum on the ") + to_string(e_borel.branch) +
                              " branch combined with two-instanton term on the " + to_string(e2.branch) + " branch");
  }
  const int w = digits + 10;
  DeltaRecord r;
  r.g = g;
  r.K = K;
  r.borel_digits = e_borel.digits;
  const BigReal si = imaginary_scale(g, w);
  const BigReal in_err = e_borel.error.with_digits(w) + e2.error.with_digits(w);
  r.delta_I = ((e_borel.value.im.with_digits(w) + e2.value.im.with_digits(w)) / si).with_digits(digits);
  r.delta_I_error = (in_err / si).with_digits(digits);
  if (e_fock) {
    const BigReal sr = real_scale(g, w);
    r.delta_R = ((e_borel.value.re.with_digits(w) + e2.value.re.with_digits(w) - e_fock->mean.with_digits(w)) / sr)
                    .with_digits(digits);
    r.delta_R_error = ((in_err + pow10(-e_fock->digits, w)) / sr).with_digits(digits);
    r.fock_cutoff = e_fock->cutoff;
    r.fock_digits = e_fock->digits;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Slope fits

struct SlopeFit {
  double slope = 0;
  double stderr_ = 0;
  double intercept = 0;
  double g_lo = 0, g_hi = 0;
  std::size_t count = 0;
  double residual_mean = 0;  // zero up to rounding
};

/// OLS of ln|delta| on ln g over the points with g inside `window` (inclusive).
inline SlopeFit fit_loglog_slope(const std::vector<std::pair<BigReal, BigReal>>& points,
                                 std::optional<std::pair<double, double>> window = std::nullopt) {
  std::vector<std::pair<BigReal, BigReal>> use;
  for (const auto& p : points) {
    const double g = p.first.to_double();
    if (window && (g < window->first || g > window->second)) continue;
    use.push_back(p);
  }
  if (use.size() < 3) throw FitError("slope fit needs at least 3 points in the window, got " + std::to_string(use.size()));
  int pos = 0, neg = 0;
  std::ostringstream zeros;
  for (const auto& [g, d] : use) {
    if (d.is_zero()) zeros << ' ' << g.to_string(6);
    (d > 0L ? pos : neg) += d.is_zero() ? 0 : 1;
  }
  if (!zeros.str().empty()) throw FitError("slope fit: delta vanishes at g =" + zeros.str());
  if (pos > 0 && neg > 0) {
    const bool minority_pos = pos <= neg;
    std::ostringstream bad;
    for (const auto& [g, d] : use) {
      if ((d > 0L) == minority_pos) bad << ' ' << g.to_string(6);
    }
    throw FitError("slope fit: delta changes sign; minority-sign points at g =" + bad.str());
  }
  std::vector<double> x, y;
  for (const auto& [g, d] : use) {
    x.push_back(log(g.with_digits(30)).to_double());
    y.push_back(log(abs(d).with_digits(30)).to_double());
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw FitError("slope fit: all points share the same g");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0, rsum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
    rsum += r;
  }
  f.residual_mean = rsum / n;
  f.stderr_ = x.size() > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0;
  f.count = x.size();
  f.g_lo = std::exp(*std::min_element(x.begin(), x.end()));
  f.g_hi = std::exp(*std::max_element(x.begin(), x.end()));
  return f;
}

// ---------------------------------------------------------------------------
// Linear least squares

namespace detail {

struct LeastSquares {
  std::vector<BigReal> coef;
  std::vector<BigReal> stderr_;     // from the residual variance
  std::vector<BigReal> propagated;  // sum_i |pinv_ji| * dy_i
  double condition = 0;
};

// Solves min ||A c - y|| by modified Gram-Schmidt with one reorthogonalization
// pass. Columns should be pre-scaled to comparable size by the caller.
inline LeastSquares least_squares(const std::vector<std::vector<BigReal>>& a, const std::vector<BigReal>& y,
                                  const std::vector<BigReal>& dy, int digits) {
  const std::size_t n = a.size(), p = a.empty() ? 0 : a[0].size();
  if (n < p || p == 0) throw FitError("least squares: more unknowns than data points");
  std::vector<std::vector<BigReal>> q(p, std::vector<BigReal>(n, BigReal(0L, digits)));
  std::vector<std::vector<BigReal>> r(p, std::vector<BigReal>(p, BigReal(0L, digits)));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) q[j][i] = a[i][j].with_digits(digits);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        BigReal dot(0L, digits);
        for (std::size_t i = 0; i < n; ++i) dot += q[k][i] * q[j][i];
        for (std::size_t i = 0; i < n; ++i) q[j][i] -= dot * q[k][i];
        r[k][j] += dot;
      }
    }
    BigReal nrm(0L, digits);
    for (std::size_t i = 0; i < n; ++i) nrm += q[j][i] * q[j][i];
    nrm = sqrt(nrm);
    if (nrm.is_zero()) throw FitError("least squares: design matrix is rank deficient", HUGE_VAL);
    r[j][j] = nrm;
    for (std::size_t i = 0; i < n; ++i) q[j][i] /= nrm;
  }
  // R^{-1}, upper triangular
  std::vector<std::vector<BigReal>> rinv(p, std::vector<BigReal>(p, BigReal(0L, digits)));
  for (std::size_t j = 0; j < p; ++j) {
    rinv[j][j] = 1L / r[j][j];
    for (std::size_t ii = j; ii-- > 0;) {
      BigReal s(0L, digits);
      for (std::size_t k = ii + 1; k <= j; ++k) s += r[ii][k] * rinv[k][j];
      rinv[ii][j] = -s / r[ii][ii];
    }
  }
  auto norm1 = [&](const std::vector<std::vector<BigReal>>& m) {
    BigReal best(0L, digits);
    for (std::size_t j = 0; j < p; ++j) {
      BigReal col(0L, digits);
      for (std::size_t i = 0; i < p; ++i) col += abs(m[i][j]);
      best = max(best, col);
    }
    return best;
  };
  LeastSquares out;
  out.condition = (norm1(r) * norm1(rinv)).to_double();
  if (!(out.condition < std::pow(10.0, std::min(300, digits - 15)))) {
    throw FitError("least squares: design matrix ill-conditioned (condition ~ " + std::to_string(out.condition) + ")",
                   out.condition);
  }
  // pinv = R^{-1} Q^T
  std::vector<std::vector<BigReal>> pinv(p, std::vector<BigReal>(n, BigReal(0L, digits)));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      BigReal s(0L, digits);
      for (std::size_t k = j; k < p; ++k) s += rinv[j][k] * q[k][i];
      pinv[j][i] = std::move(s);
    }
  }
  out.coef.assign(p, BigReal(0L, digits));
  out.propagated.assign(p, BigReal(0L, digits));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      out.coef[j] += pinv[j][i] * y[i];
      out.propagated[j] += abs(pinv[j][i]) * dy[i];
    }
  }
  BigReal rss(0L, digits);
  for (std::size_t i = 0; i < n; ++i) {
    BigReal res = y[i].with_digits(digits);
    for (std::size_t j = 0; j < p; ++j) res -= a[i][j] * out.coef[j];
    rss += res * res;
  }
  const BigReal sigma2 = n > p ? rss / static_cast<long>(n - p) : BigReal(0L, digits);
  out.stderr_.assign(p, BigReal(0L, digits));
  for (std::size_t j = 0; j < p; ++j) {
    BigReal s(0L, digits);
    for (std::size_t k = j; k < p; ++k) s += rinv[j][k] * rinv[j][k];
    out.stderr_[j] = sqrt(sigma2 * s);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Coefficient extraction

enum class Channel { imaginary, real };

inline const char* to_string(Channel c) { return c == Channel::imaginary ? "imaginary" : "real"; }
inline Channel parse_channel(std::string_view s) {
  if (s == "imaginary") return Channel::imaginary;
  if (s == "real") return Channel::real;
  throw std::invalid_argument("channel must be 'imaginary' or 'real', got '" + std::string(s) + "'");
}

struct CoefficientEstimate {
  int n = 2, l = 1, k = 0;
  BigReal value;
  BigReal error;
  // method metadata
  double g_lo = 0, g_hi = 0;
  std::size_t points = 0;
  int k_max = 0;
  Channel channel = Channel::imaginary;
  BigReal covariance_error, window_spread, input_error;
};

struct ExtractOptions {
  int digits = 60;
  std::size_t windows = 3;  // shifted sub-windows used for the spread estimate
  // Real channel: take eps_20k for k <= this order from the known table
  // instead of fitting them. ln(2/g) varies too little over a desk-scale
  // window to separate the l = 0 and l = 1 unknowns reliably.
  std::optional<int> real_l0_given;
};

namespace detail {

struct ExtractionSystem {
  std::vector<std::vector<BigReal>> a;
  std::vector<BigReal> y, dy;
  std::vector<std::pair<int, int>> unknowns;  // (l, k)
  std::vector<BigReal> column_scale;
};

inline ExtractionSystem extraction_system(const std::vector<DeltaRecord>& recs, Channel channel,
                                          const InstantonCoefficients& known, int k_max, int digits,
                                          std::optional<int> l0_given) {
  const int K = recs.front().K;
  const int K0 = std::max(K, l0_given.value_or(K));
  ExtractionSystem s;
  for (int k = K + 1; k <= k_max; ++k) {
    if (channel == Channel::real && k > K0) s.unknowns.push_back({0, k});
    s.unknowns.push_back({1, k});
  }
  BigReal gmax(0L, digits);
  for (const auto& r : recs) gmax = max(gmax, r.g.with_digits(digits));
  for (const auto& [l, k] : s.unknowns) s.column_scale.push_back(pow(gmax, k - K - 1));

  for (const auto& r : recs) {
    const BigReal g = r.g.with_digits(digits);
    const BigReal L = log(2L / g);
    const BigReal gk1 = pow(g, K + 1);
    // residual R(g) = sum_{k>K} (eps_20k [real only] + L^l eps_21k) g^k, divided by g^{K+1}
    BigReal yi(0L, digits), dyi(0L, digits);
    if (channel == Channel::imaginary) {
      yi = -r.delta_I.with_digits(digits);
      dyi = r.delta_I_error.with_digits(digits);
    } else {
      if (!r.delta_R) throw std::invalid_argument("extract_coefficients: real channel needs delta_R in every record");
      yi = -r.delta_R->with_digits(digits) * L;
      dyi = (r.delta_R_error ? r.delta_R_error->with_digits(digits) : BigReal(0L, digits)) * L;
    }
    // uncertainty of the subtracted coefficients
    for (int k = 0; k <= K; ++k) {
      dyi += BigReal(known.at({2, 1, k}).error, digits) * pow(g, k) * (channel == Channel::real ? L : BigReal(1L, digits));
      if (channel == Channel::real) dyi += BigReal(known.at({2, 0, k}).error, digits) * pow(g, k);
    }
    if (channel == Channel::real) {
      for (int k = K + 1; k <= K0; ++k) {
        const auto& e = known.at({2, 0, k});
        yi -= e.value.evaluate(digits) * pow(g, k);
        dyi += BigReal(e.error, digits) * pow(g, k);
      }
    }
    s.y.push_back(yi / gk1);
    s.dy.push_back(dyi / gk1);
    std::vector<BigReal> row;
    for (std::size_t j = 0; j < s.unknowns.size(); ++j) {
      const auto [l, k] = s.unknowns[j];
      BigReal v = pow(g, k - K - 1) / s.column_scale[j];
      if (channel == Channel::real && l == 1) v *= L;
      row.push_back(std::move(v));
    }
    s.a.push_back(std::move(row));
  }
  return s;
}

}  // namespace detail

/// Weighted least squares (weights 1/g^{2(K+1)}) for the coefficients beyond
/// K. Imaginary channel: basis g^k, unknowns eps_21k. Real channel: basis
/// g^k and g^k ln(2/g), unknowns eps_20k and eps_21k.
inline std::vector<CoefficientEstimate> extract_coefficients(std::vector<DeltaRecord> records, Channel channel,
                                                             const InstantonCoefficients& known, int k_max,
                                                             const ExtractOptions& opt = {}) {
  if (records.empty()) throw FitError("extract_coefficients: no records");
  const int K = records.front().K;
  for (const auto& r : records) {
    if (r.K != K) throw std::invalid_argument("extract_coefficients: records mix different K");
  }
  if (k_max <= K) throw std::invalid_argument("extract_coefficients: k_max must exceed K");
  std::sort(records.begin(), records.end(), [](const DeltaRecord& a, const DeltaRecord& b) { return a.g < b.g; });
  const int K0 = std::min(k_max, std::max(K, opt.real_l0_given.value_or(K)));
  const std::size_t unknowns =
      static_cast<std::size_t>((k_max - K) + (channel == Channel::real ? k_max - K0 : 0));
  const std::size_t n = records.size();
  if (n < unknowns + 2) {
    throw FitError("extract_coefficients: " + std::to_string(n) + " points cannot determine " +
                   std::to_string(unknowns) + " coefficients (need at least " + std::to_string(unknowns + 2) + ")");
  }
  const int d = opt.digits;
  const auto full = detail::extraction_system(records, channel, known, k_max, d, opt.real_l0_given);
  const auto fit = detail::least_squares(full.a, full.y, full.dy, d);

  // Sub-windows each drop `drop` points (about a third of the grid), shifted
  // from the small-g end to the large-g end. Truncation bias of the monomial
  // model depends on the g range, so the spread picks it up.
  const std::size_t windows = std::max<std::size_t>(opt.windows, 2);
  const std::size_t drop = std::min(std::max(windows - 1, n / 3), n - unknowns - 1);
  std::vector<BigReal> spread(unknowns, BigReal(0L, d));
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t off = drop * w / (windows - 1);
    std::vector<DeltaRecord> sub(records.begin() + static_cast<std::ptrdiff_t>(off),
                                 records.end() - static_cast<std::ptrdiff_t>(drop - off));
    const auto sys = detail::extraction_system(sub, channel, known, k_max, d, opt.real_l0_given);
    const auto f = detail::least_squares(sys.a, sys.y, sys.dy, d);
    for (std::size_t j = 0; j < unknowns; ++j) {
      // sub-windows use their own column scale
      const BigReal v = f.coef[j] / sys.column_scale[j];
      spread[j] = max(spread[j], abs(v - fit.coef[j] / full.column_scale[j]));
    }
  }

  std::vector<CoefficientEstimate> out;
  for (std::size_t j = 0; j < unknowns; ++j) {
    CoefficientEstimate e;
    e.l = full.unknowns[j].first;
    e.k = full.unknowns[j].second;
    e.value = fit.coef[j] / full.column_scale[j];
    e.covariance_error = fit.stderr_[j] / full.column_scale[j];
    e.input_error = fit.propagated[j] / full.column_scale[j];
    e.window_spread = spread[j];
    e.error = max(max(e.covariance_error, e.window_spread), e.input_error);
    if (!(e.error > 0L)) e.error = abs(e.value) * pow10(-d + 5, d) + pow10(-d + 5, d);
    e.g_lo = records.front().g.to_double();
    e.g_hi = records.back().g.to_double();
    e.points = records.size();
    e.k_max = k_max;
    e.channel = channel;
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-instanton sector replaced by its Borel sum

struct ImprovedTwoInstanton {
  BigComplex value;
  BigComplex s20, s21;  // resummed (or truncated) channel sums
  bool s20_resummed = false;
  std::optional<std::string> warning;
};

/// Two-instanton term with sum_k eps_21k g^k (through order K, or the last
/// available coefficient) replaced by its lateral Borel-Pade sum. The l = 0
/// channel is resummed only on request and when it has at least four
/// coefficients; its low-order approximant tends to place a spurious pole
/// close to the positive axis, which feeds a fake imaginary part.
inline ImprovedTwoInstanton two_instanton_resummed(const BigReal& g, int K, Branch branch,
                                                   const InstantonCoefficients& coeffs, int digits,
                                                   bool resum_l0 = false, const ContourSpec* contour = nullptr) {
  const int k1 = std::min(K, coeffs.max_contiguous_k(2, 1));
  if (k1 + 1 < 4) {
    throw std::invalid_argument("two_instanton_resummed: need at least 4 coefficients eps_21k, have " +
                                std::to_string(std::max(k1 + 1, 0)));
  }
  const int k0 = std::min(K, coeffs.max_contiguous_k(2, 0));
  const int w = digits + 10;
  const ContourSpec c = contour ? *contour : ContourSpec::standard(branch);
  if (c.branch != branch) throw BranchMismatchError("contour branch differs from requested branch");
  auto values = [&](int l, int kmax) {
    std::vector<BigReal> v;
    for (int k = 0; k <= kmax; ++k) v.push_back(coeffs.value({2, l, k}, w + pade_guard_digits(kmax)));
    return v;
  };
  ImprovedTwoInstanton out;
  const LateralSum b1 = borel_sum_numeric(values(1, k1), g, c, w);
  out.s21 = b1.value;
  out.warning = b1.warning;
  if (resum_l0 && k0 + 1 >= 4) {
    const LateralSum b0 = borel_sum_numeric(values(0, k0), g, c, w);
    out.s20 = b0.value;
    out.s20_resummed = true;
    if (b0.warning) out.warning = out.warning.value_or("") + b0.warning.value();
  } else {
    BigReal s(0L, w), gk(1L, w);
    for (int k = 0; k <= k0; ++k, gk *= g.with_digits(w)) s += coeffs.value({2, 0, k}, w) * gk;
    out.s20 = BigComplex(s);
  }
  const BigReal gw = g.with_digits(w);
  const BigReal pref = exp(-1L / (3L * gw)) / (BigReal::pi(w) * gw);
  BigComplex v = out.s20 + log_minus_two_over_g(gw, branch, w) * out.s21;
  v *= pref;
  out.value = {v.re.with_digits(digits), v.im.with_digits(digits)};
  return out;
}

/// Delta with the two-instanton sector replaced by its Borel sum.
inline DeltaRecord borel_improved_delta(const BigReal& g, int K, const BorelEnergy& e_borel,
                                        const InstantonCoefficients& coeffs, const std::optional<FockResult>& e_fock,
                                        int digits, bool resum_l0 = false) {
  const auto improved = two_instanton_resummed(g, K, e_borel.branch, coeffs, digits, resum_l0);
  TwoInstantonEval e2;
  e2.g = g;
  e2.K = K;
  e2.branch = e_borel.branch;
  e2.value = improved.value;
  e2.error = BigReal(0L, digits);
  return compute_delta(g, K, e_borel, e2, e_fock, digits);
}

}  // namespace dwr
