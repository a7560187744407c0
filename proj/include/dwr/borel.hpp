#pragma once

// Borel transform, diagonal Pade continuation, pole analysis and the lateral
// inverse Borel integral along a rotated, truncated ray.

#include <dwr/numerics.hpp>
#include <dwr/pade.hpp>
#include <dwr/perturbation.hpp>
#include <dwr/quadrature.hpp>
#include <dwr/roots.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

struct BorelSeries {
  std::vector<ExactRational> coeffs;  // b_k = eps_k / k!

  std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

inline BorelSeries borel_transform(const PerturbationSeries& series) {
  if (series.coeffs.empty()) throw std::invalid_argument("borel_transform: empty series");
  BorelSeries b;
  b.coeffs.reserve(series.coeffs.size());
  BigInteger fact = 1;
  for (std::size_t k = 0; k < series.coeffs.size(); ++k) {
    if (k > 0) fact *= static_cast<unsigned long>(k);
    b.coeffs.push_back(series.coeffs[k] / ExactRational(fact));
  }
  return b;
}

/// [ceil(K/2) / floor(K/2)] approximant of the Borel series of order K.
inline PadeApproximant pade_diagonal(const BorelSeries& b) {
  const std::size_t K = b.order();
  if (K < 2) throw std::invalid_argument("pade_diagonal: order must be at least 2");
  return pade_exact(b.coeffs, (K + 1) / 2, K / 2);
}

// ---------------------------------------------------------------------------
// Poles

struct Pole {
  BigComplex location;
  BigComplex residue;
  bool spurious = false;
};

struct PoleReport {
  std::vector<Pole> poles;
  int digits = 0;
};

struct PoleOptions {
  double spurious_threshold = 1e-20;  // relative to the median |residue|
  RootOptions roots;
};

/// Extra digits carried while evaluating a Pade approximant of order K in the
/// monomial basis; covers the cancellation between large coefficients.
inline int pade_guard_digits(std::size_t order) { return 20 + static_cast<int>(order) / 2; }

/// Roots of the denominator with residues numerator/denominator'. Poles whose
/// residue is tiny compared with the median are flagged as Froissart doublets.
inline PoleReport pade_poles(const PadeApproximant& p, int digits, const PoleOptions& opt = {}) {
  if (p.denominator_degree() < 1) throw std::invalid_argument("pade_poles: denominator degree must be >= 1");
  // high-order denominators are badly conditioned; roots need the same guard as evaluation
  const int work = digits + pade_guard_digits(p.order());
  const RationalFunction f = RationalFunction::from(p, work);
  std::vector<BigReal> dden;
  for (std::size_t k = 1; k < f.denominator().size(); ++k) dden.push_back(f.denominator()[k] * static_cast<long>(k));

  const auto roots = polynomial_roots(f.denominator(), work, opt.roots);
  PoleReport rep;
  rep.digits = digits;
  std::vector<double> mags;
  for (const auto& z : roots) {
    Pole pole;
    pole.residue = horner(f.numerator(), z) / horner(dden, z);
    pole.location = BigComplex(z.re.with_digits(digits), z.im.with_digits(digits));
    pole.residue = BigComplex(pole.residue.re.with_digits(digits), pole.residue.im.with_digits(digits));
    mags.push_back(detail::log_abs(abs(pole.residue)));
    rep.poles.push_back(std::move(pole));
  }
  if (!mags.empty()) {
    std::vector<double> sorted = mags;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double log_median = sorted[sorted.size() / 2];
    const double log_thr = std::log(opt.spurious_threshold);
    for (std::size_t i = 0; i < mags.size(); ++i) rep.poles[i].spurious = mags[i] < log_median + log_thr;
  }
  std::sort(rep.poles.begin(), rep.poles.end(), [](const Pole& a, const Pole& b) {
    if (a.location.re != b.location.re) return a.location.re < b.location.re;
    return a.location.im < b.location.im;
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Lateral Borel integral

enum class Branch { upper, lower };

inline const char* to_string(Branch b) { return b == Branch::upper ? "upper" : "lower"; }
inline Branch parse_branch(std::string_view s) {
  if (s == "upper") return Branch::upper;
  if (s == "lower") return Branch::lower;
  throw std::invalid_argument("branch must be 'upper' or 'lower', got '" + std::string(s) + "'");
}

/// Integration ray t = s e^{i theta}, cut where Re t = t_cut. The angle is
/// stored as a rational multiple of pi; its sign must match the branch.
struct ContourSpec {
  ExactRational angle_over_pi{1, 4};
  ExactRational t_cut{7, 5};
  Branch branch = Branch::upper;

  static ContourSpec standard(Branch b) {
    ContourSpec c;
    c.branch = b;
    c.angle_over_pi = b == Branch::upper ? ExactRational(1, 4) : ExactRational(-1, 4);
    return c;
  }

  void validate() const {
    const bool ok_angle = branch == Branch::upper ? (angle_over_pi > 0 && angle_over_pi < ExactRational(1, 2))
                                                  : (angle_over_pi < 0 && angle_over_pi > ExactRational(-1, 2));
    if (!ok_angle) throw std::invalid_argument("contour angle inconsistent with branch");
    if (!(t_cut > ExactRational(1, 3))) throw std::invalid_argument("contour cut must exceed 1/3");
  }

  BigReal angle(int digits) const { return BigReal::pi(digits) * BigReal(angle_over_pi, digits); }

  ContourSpec mirrored() const {
    ContourSpec c = *this;
    c.angle_over_pi = -angle_over_pi;
    c.branch = branch == Branch::upper ? Branch::lower : Branch::upper;
    return c;
  }
};

struct LateralSum {
  BigComplex value;
  double quad_tol_achieved = 0;
  int panels = 0;
  int digits = 0;
  std::optional<double> condition_estimate;
  std::optional<std::string> warning;
};


/// (1/g) int_0^{t_cut/cos theta} e^{-t/g} P(t) dt along t = s e^{i theta}.
/// `pade` must hold coefficients at (at least) the evaluation precision.
inline LateralSum inverse_borel(const RationalFunction& pade, const BigReal& g, const ContourSpec& contour, int digits,
                                const QuadratureOptions& qopt = {}) {
  if (!(g > 0L)) throw std::domain_error("inverse_borel: coupling must be positive");
  contour.validate();
  if (digits < required_digits(g, 1)) {
    throw std::domain_error("inverse_borel: " + std::to_string(digits) + " digits cannot resolve e^{-1/3g} at g = " +
                            g.to_string(8) + "; need at least " + std::to_string(required_digits(g, 1)));
  }
  const int work = pade.denominator().empty() ? digits : pade.denominator().front().digits();
  const BigReal theta = contour.angle(work);
  const BigComplex dir = BigComplex::polar(BigReal(1L, work), theta);
  const BigReal gw = g.with_digits(work);
  const BigReal s_max = BigReal(contour.t_cut, work) / cos(theta);

  auto integrand = [&](const BigReal& s) {
    const BigComplex t = dir * s;
    BigComplex w = exp(BigComplex(-t.re / gw, -t.im / gw)) * pade(t);
    return w * dir;
  };
  QuadratureResult q = integrate_adaptive(integrand, BigReal(0L, work), s_max, digits, qopt);
  LateralSum out;
  out.value = q.value / gw;
  out.value = BigComplex(out.value.re.with_digits(digits), out.value.im.with_digits(digits));
  out.quad_tol_achieved = q.achieved_tolerance;
  out.panels = q.panels;
  out.digits = digits;
  return out;
}

inline LateralSum inverse_borel(const PadeApproximant& p, const BigReal& g, const ContourSpec& contour, int digits,
                                const QuadratureOptions& qopt = {}) {
  return inverse_borel(RationalFunction::from(p, digits + pade_guard_digits(p.order())), g, contour, digits, qopt);
}

/// Borel-Pade sum of a series known only numerically: divide by k!, take the
/// diagonal Pade approximant in floating point, integrate laterally.
inline LateralSum borel_sum_numeric(const std::vector<BigReal>& coeffs, const BigReal& g, const ContourSpec& contour,
                                    int digits, const QuadratureOptions& qopt = {}) {
  if (coeffs.size() < 4) throw std::invalid_argument("borel_sum_numeric: need at least 4 coefficients");
  const std::size_t K = coeffs.size() - 1;
  const int work = digits + pade_guard_digits(K);
  std::vector<BigReal> b;
  BigReal fact(1L, work);
  for (std::size_t k = 0; k <= K; ++k) {
    if (k > 0) fact *= static_cast<long>(k);
    b.push_back(coeffs[k].with_digits(work) / fact);
  }
  const NumericPade p = pade_numeric(b, (K + 1) / 2, K / 2);
  LateralSum out = inverse_borel(RationalFunction::from(p, work), g, contour, digits, qopt);
  out.condition_estimate = p.condition_estimate;
  if (p.condition_estimate && *p.condition_estimate > std::pow(10.0, std::min(300, work / 2))) {
    out.warning = "ill-conditioned Pade system (condition ~ " + std::to_string(*p.condition_estimate) + ")";
  }
  if (p.degree_reductions > 0) {
    out.warning = out.warning.value_or("") + "Pade denominator reduced " + std::to_string(p.degree_reductions) +
                  " time(s)";
  }
  return out;
}

}  // namespace dwr
