#pragma once

// Adaptive composite Gauss-Legendre quadrature for complex-valued integrands
// of a real parameter, in arbitrary precision.

#include <dwr/numerics.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

namespace dwr {

class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double achieved) : NumericalError(what), achieved_(achieved) {}
  double achieved_tolerance() const { return achieved_; }

 private:
  double achieved_;
};

struct GaussLegendreRule {
  std::vector<BigReal> nodes;    // on [-1, 1]
  std::vector<BigReal> weights;
};

/// n-point Gauss-Legendre rule at the given precision (Newton on P_n).
inline GaussLegendreRule compute_gauss_legendre(int n, int digits) {
  const int work = digits + 10;
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const BigReal one(1L, work), tol = pow10(-work + 2, work);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    BigReal x(std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)), work);
    BigReal dp(0L, work);
    for (int iter = 0; iter < 100; ++iter) {
      // P_n(x) and P_n'(x) by the three-term recurrence
      BigReal p0 = one, p1 = x;
      for (int k = 2; k <= n; ++k) {
        BigReal p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / static_cast<long>(k);
        p0 = std::move(p1);
        p1 = std::move(p2);
      }
      dp = static_cast<long>(n) * (x * p1 - p0) / (x * x - one);
      const BigReal dx = p1 / dp;
      x -= dx;
      if (abs(dx) <= tol) break;
    }
    // recompute derivative at the converged node
    BigReal p0 = one, p1 = x;
    for (int k = 2; k <= n; ++k) {
      BigReal p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / static_cast<long>(k);
      p0 = std::move(p1);
      p1 = std::move(p2);
    }
    dp = static_cast<long>(n) * (x * p1 - p0) / (x * x - one);
    const BigReal w = 2L / ((one - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = (-x).with_digits(digits);
    rule.nodes[hi] = x.with_digits(digits);
    rule.weights[lo] = w.with_digits(digits);
    rule.weights[hi] = w.with_digits(digits);
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = BigReal(0L, digits);
  return rule;
}

/// Rules are cached per (points, digits); safe to call from several threads.
inline std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n, int digits) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, digits}];
  if (!slot) slot = std::make_shared<const GaussLegendreRule>(compute_gauss_legendre(n, digits));
  return slot;
}

struct QuadratureOptions {
  int points = 0;          // 0: choose from the precision
  int max_panels = 4096;
  int initial_panels = 8;
};

struct QuadratureResult {
  BigComplex value;
  double achieved_tolerance = 0;  // sum of panel refinement differences / |value|
  int panels = 0;
};

/// Integrates f over [a, b]. A panel is accepted when its single-rule value
/// and the sum over its two halves agree to a share of 10^{-(digits-10)}
/// relative to the whole integral.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, const BigReal& a, const BigReal& b, int digits,
                                    const QuadratureOptions& opt = {}) {
  const int points = opt.points > 0 ? opt.points : std::clamp(digits / 2 + 10, 20, 160);
  const auto rule = gauss_legendre(points, digits);

  auto panel = [&](const BigReal& lo, const BigReal& hi) {
    const BigReal half = (hi - lo) / 2L, mid = (hi + lo) / 2L;
    BigComplex acc{BigReal(0L, digits), BigReal(0L, digits)};
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      acc += rule->weights[i] * f(mid + half * rule->nodes[i]);
    }
    return acc * half;
  };

  struct Panel {
    BigReal lo, hi;
    BigComplex value;
  };
  const BigReal length = b - a;
  std::vector<Panel> work;
  BigComplex coarse{BigReal(0L, digits), BigReal(0L, digits)};
  for (int i = 0; i < opt.initial_panels; ++i) {
    BigReal lo = a + length * static_cast<long>(i) / static_cast<long>(opt.initial_panels);
    BigReal hi = a + length * static_cast<long>(i + 1) / static_cast<long>(opt.initial_panels);
    BigComplex v = panel(lo, hi);
    coarse += v;
    work.push_back({std::move(lo), std::move(hi), std::move(v)});
  }
  BigReal scale = abs(coarse);
  if (scale.is_zero()) scale = BigReal(1L, digits);
  const BigReal tol = pow10(-(digits - 10), digits) * scale;

  QuadratureResult out;
  out.value = BigComplex{BigReal(0L, digits), BigReal(0L, digits)};
  BigReal err(0L, digits);
  int panels = static_cast<int>(work.size());
  while (!work.empty()) {
    Panel p = std::move(work.back());
    work.pop_back();
    const BigReal mid = (p.lo + p.hi) / 2L;
    BigComplex left = panel(p.lo, mid), right = panel(mid, p.hi);
    BigComplex refined = left + right;
    const BigReal diff = abs(refined - p.value);
    if (diff <= tol * (p.hi - p.lo) / length) {
      out.value += refined;
      err += diff;
      continue;
    }
    panels += 1;
    if (panels > opt.max_panels) {
      throw QuadratureError("quadrature did not converge within " + std::to_string(opt.max_panels) + " panels",
                            (diff / scale).to_double());
    }
    work.push_back({mid, p.hi, std::move(right)});
    work.push_back({p.lo, mid, std::move(left)});
  }
  out.panels = panels;
  const BigReal mag = abs(out.value);
  out.achieved_tolerance = (err / (mag.is_zero() ? BigReal(1L, digits) : mag)).to_double();
  return out;
}

}  // namespace dwr
