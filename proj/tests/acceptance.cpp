// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. The K = 200 series and its Pade
// approximant are computed once and shared.
//
// DWR_ACCEPTANCE_SKIP_LONG=1 skips the optional K = 500 asymptotics check.

#include <dwr/dwr.hpp>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dwr;

namespace {

// --- pinned tolerances --------------------------------------------------
constexpr std::size_t kOrder = 200;
constexpr std::size_t kLongOrder = 500;
constexpr double kRatioBound = 0.05;          // |ratio - 1| at k = 200
constexpr std::size_t kMonotoneFrom = 100;    // |ratio - 1| must decrease for k >= this
constexpr double kLongRatio = 0.006;          // 0.6 % at k = 500
constexpr double kLongRatioBand = 0.001;      // +- 0.1 percentage points
constexpr double kPoleTol = 1e-3;             // |t_pole - 1/3|
constexpr double kCancelShare = 0.2;          // |Im E_B + Im E2| <= 0.2 |Im E_B|
constexpr double kSlopeTolI = 0.1;
constexpr double kSlopeTolR = 0.15;
constexpr double kMonotoneGMax = 0.02;
constexpr std::size_t kBarrierLevels = 38;
constexpr double kEps210Abs = 1e-3;
constexpr double kEps211Rel = 1e-2;
constexpr double kEps213Rel = 5e-5;           // four significant digits
constexpr double kImprovement = 10.0;
constexpr double kFloorBand = 0.5;            // 0.5 <= |Delta| / floor <= 1 / 0.5
constexpr int kSymmetryCouplings = 100;

constexpr int kDigits = 80;       // grid working precision
constexpr int kFockDigits = 70;   // certified Fock digits
constexpr int kSymmetryDigits = 60;

// desk grid for the slopes, dense grid for extraction and the improvement
const double kGridLo = 0.005, kGridHi = 0.05;
constexpr std::size_t kGridPoints = 12;
const double kDenseLo = 0.005, kDenseHi = 0.01;
constexpr std::size_t kDensePoints = 30;
const double kImagExtractHi = 0.008;
const double kImproveLo = 0.005, kImproveHi = 0.009;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<std::pair<int, bool>> results;

void report(int id, const std::string& name, Outcome& o, double seconds) {
  std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ":" << o.detail.str()
            << "  (" << std::fixed << std::setprecision(1) << seconds << " s)" << std::defaultfloat << std::endl;
  results.push_back({id, o.pass});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int p = 4) {
  std::ostringstream os;
  os << std::setprecision(p) << x;
  return os.str();
}

std::vector<std::pair<BigReal, BigReal>> channel_points(const std::vector<DeltaRecord>& recs, bool real) {
  std::vector<std::pair<BigReal, BigReal>> pts;
  for (const auto& r : recs) pts.push_back({r.g, real ? *r.delta_R : r.delta_I});
  return pts;
}

// slope fit that reports a FitError as a failed check instead of aborting
std::optional<SlopeFit> try_fit(const std::vector<std::pair<BigReal, BigReal>>& pts, Outcome& o, const std::string& tag) {
  try {
    return fit_loglog_slope(pts);
  } catch (const FitError& e) {
    o.require(false, tag + ": " + e.what());
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------

void criterion1(const PerturbationSeries& s) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.require(s[0] == ExactRational(1, 2), "eps_0 = 1/2");
  bool negative = true;
  for (std::size_t k = 1; k <= s.order(); ++k) negative = negative && s[k] < 0;
  o.require(negative, "eps_k < 0 for k >= 1");
  std::vector<double> dev;
  for (std::size_t k = 1; k <= s.order(); ++k) dev.push_back(std::abs(asymptotic_ratio(s, k, 30).to_double() - 1));
  // the large-order regime starts at k = kMonotoneFrom; report where monotone decrease actually begins
  std::size_t rises = 0, monotone_from = 1;
  for (std::size_t i = 1; i < dev.size(); ++i) {
    if (dev[i] >= dev[i - 1]) monotone_from = i + 1;
    if (i + 1 > kMonotoneFrom && dev[i] >= dev[i - 1]) ++rises;
  }
  o.detail << " |ratio-1| decreasing from k=" << monotone_from << ";";
  o.require(rises == 0, std::to_string(rises) + " non-decreasing steps in |ratio - 1| for k >= " +
                            std::to_string(kMonotoneFrom));
  o.detail << " |ratio-1| at k=" << s.order() << " is " << fmt(dev.back());
  o.require(dev.back() < kRatioBound, "|ratio - 1| < " + fmt(kRatioBound));

  const char* skip = std::getenv("DWR_ACCEPTANCE_SKIP_LONG");
  if (skip && std::string(skip) == "1") {
    o.detail << "; optional K=" << kLongOrder << " skipped";
  } else {
    const auto big = compute_rs_coefficients(kLongOrder);
    const double r = std::abs(asymptotic_ratio(big, kLongOrder, 30).to_double() - 1);
    o.detail << "; at k=" << kLongOrder << " " << fmt(100 * r, 3) << "%";
    o.require(std::abs(r - kLongRatio) <= kLongRatioBand, "K=500 deviation within 0.6 +- 0.1 %");
  }
  report(1, "coefficient asymptotics", o, seconds_since(t0));
}

struct PoleSummary {
  std::optional<BigReal> smallest_real;
  std::optional<BigReal> min_complex_modulus;
};

PoleSummary summarize_poles(const PadeApproximant& p) {
  const auto rep = pade_poles(p, 30);
  PoleSummary s;
  for (const auto& pole : rep.poles) {
    if (pole.spurious) continue;
    const BigReal mod = abs(pole.location);
    const bool real = abs(pole.location.im) <= mod * pow10(-15, 30);
    if (real && pole.location.re > 0L) {
      if (!s.smallest_real || pole.location.re < *s.smallest_real) s.smallest_real = pole.location.re;
    } else if (!real) {
      if (!s.min_complex_modulus || mod < *s.min_complex_modulus) s.min_complex_modulus = mod;
    }
  }
  return s;
}

void criterion2(const PerturbationSeries& s, const PadeApproximant& p200) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (std::size_t K : {std::size_t{10}, std::size_t{50}, kOrder}) {
    const auto b = borel_transform(s.truncated(K));
    const auto p = K == kOrder ? p200 : pade_diagonal(b);
    o.require(taylor_coefficients(p, K) == b.coeffs, "Taylor match at K=" + std::to_string(K));
  }
  o.detail << " Taylor match K=10,50,200";
  const auto s200 = summarize_poles(p200);
  const auto s100 = summarize_poles(pade_diagonal(borel_transform(s.truncated(100))));
  if (s200.smallest_real) {
    const double dist = abs(*s200.smallest_real - BigReal(1L, 30) / 3L).to_double();
    o.detail << "; |t_pole - 1/3| = " << fmt(dist, 3);
    o.require(dist <= kPoleTol, "real pole within 1e-3 of 1/3");
  } else {
    o.require(false, "no positive real pole");
  }
  if (s100.min_complex_modulus && s200.min_complex_modulus) {
    o.detail << "; min complex |t| " << s100.min_complex_modulus->to_string(5) << " -> "
             << s200.min_complex_modulus->to_string(5);
    o.require(*s200.min_complex_modulus > *s100.min_complex_modulus, "complex pole modulus grows");
  } else {
    o.require(false, "no non-real poles");
  }
  report(2, "Pade identity and pole", o, seconds_since(t0));
}

void criterion3(const std::vector<GridPoint>& grid, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  std::vector<std::string> bad;
  double worst = 0;
  for (const auto& p : grid) {
    const auto e2 = two_instanton_truncated(p.g, 0, Branch::upper, c, kDigits);
    const BigReal share = abs(p.borel.value.im + e2.value.im) / abs(p.borel.value.im);
    worst = std::max(worst, share.to_double());
    if (share > BigReal(kCancelShare, 30)) bad.push_back(p.g.to_string(3));
  }
  o.detail << " max |Im E_B + Im E2| / |Im E_B| = " << fmt(worst, 3);
  if (!bad.empty()) {
    std::string list;
    for (const auto& b : bad) list += " " + b;
    o.require(false, "pointwise share > 0.2 at g =" + list);
  }
  const auto recs = delta_records(grid, 0, Branch::upper, c, kDigits);
  if (const auto f = try_fit(channel_points(recs, false), o, "Delta_I^0")) {
    o.detail << "; slope Delta_I^0 = " << fmt(f->slope) << " +- " << fmt(f->stderr_, 2);
    o.require(std::abs(f->slope - 1) <= kSlopeTolI, "slope 1 +- 0.1");
  }
  report(3, "leading cancellation", o, seconds_since(t0));
}

void criterion4(const std::vector<GridPoint>& grid, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (int K : {1, 2}) {
    const auto recs = delta_records(grid, K, Branch::upper, c, kDigits);
    if (const auto f = try_fit(channel_points(recs, false), o, "Delta_I^" + std::to_string(K))) {
      o.detail << " slope Delta_I^" << K << " = " << fmt(f->slope) << " +- " << fmt(f->stderr_, 2) << ";";
      o.require(std::abs(f->slope - (K + 1)) <= kSlopeTolI, "K=" + std::to_string(K) + " slope " + std::to_string(K + 1) + " +- 0.1");
    }
  }
  std::map<int, std::vector<DeltaRecord>> by_k;
  for (int K : {2, 4, 7, 10}) by_k[K] = delta_records(grid, K, Branch::upper, c, kDigits);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].g.to_double() > kMonotoneGMax) continue;
    ++checked;
    const int ks[] = {2, 4, 7, 10};
    for (int j = 1; j < 4; ++j) {
      if (!(abs(by_k[ks[j]][i].delta_I) < abs(by_k[ks[j - 1]][i].delta_I))) {
        o.require(false, "|Delta_I| not decreasing from K=" + std::to_string(ks[j - 1]) + " to " +
                             std::to_string(ks[j]) + " at g=" + grid[i].g.to_string(3));
      }
    }
  }
  o.detail << " monotone in K=2,4,7,10 checked at " << checked << " couplings";
  report(4, "higher-order cancellation", o, seconds_since(t0));
}

void criterion5(const std::vector<GridPoint>& grid, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  std::size_t min_cutoff = SIZE_MAX, max_cutoff = 0;
  for (const auto& p : grid) {
    min_cutoff = std::min(min_cutoff, p.fock->cutoff);
    max_cutoff = std::max(max_cutoff, p.fock->cutoff);
  }
  o.detail << " Fock at " << kFockDigits << " digits, M " << min_cutoff << ".." << max_cutoff << ";";
  for (int K : {0, 1, 2}) {
    const auto recs = delta_records(grid, K, Branch::upper, c, kDigits);
    if (const auto f = try_fit(channel_points(recs, true), o, "Delta_R^" + std::to_string(K))) {
      o.detail << " slope Delta_R^" << K << " = " << fmt(f->slope) << " +- " << fmt(f->stderr_, 2) << ";";
      o.require(std::abs(f->slope - (K + 1)) <= kSlopeTolR, "K=" + std::to_string(K) + " slope " + std::to_string(K + 1) + " +- 0.15");
    }
  }
  report(5, "real-part reconstruction", o, seconds_since(t0));
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const int d = 30;
  const BigReal g(0.002, d + 20);
  for (std::size_t M : {200u, 400u}) {
    const std::size_t n = count_below_barrier(g, M, d);
    o.detail << " M=" << M << ": " << n << " below barrier;";
    o.require(n == kBarrierLevels, "38 levels below the barrier at M=" + std::to_string(M));
  }
  const auto rows = convergence_scan(g, {50, 100, 200, 400}, kBarrierLevels + 2, d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].eigenvalues.size(); ++i) {
      if (rows[r].eigenvalues[i] > rows[r - 1].eigenvalues[i] + pow10(-d + 2, d)) {
        o.require(false, "level " + std::to_string(i) + " rises from M=" + std::to_string(rows[r - 1].cutoff));
      }
    }
  }
  o.detail << " traces non-increasing over M=50..400;";
  const auto h = build_hamiltonian(FockProblem(g.with_digits(d + kGuardDigits), 400, d + kGuardDigits), d + kGuardDigits);
  const auto even = lowest_eigenvalues(h.parity_block(0), kBarrierLevels / 2, d);
  const auto odd = lowest_eigenvalues(h.parity_block(1), kBarrierLevels / 2, d);
  for (std::size_t j = 0; j < kBarrierLevels / 2; ++j) {
    if (!(even[j] < odd[j])) o.require(false, "pair " + std::to_string(j) + " has the odd member lower");
    if (j + 1 < kBarrierLevels / 2 && !(odd[j] < even[j + 1])) o.require(false, "pairs " + std::to_string(j) + " overlap");
  }
  o.detail << " " << kBarrierLevels / 2 << " doublets with even member lower";
  report(6, "Fock phenomenology at g = 0.002", o, seconds_since(t0));
}

void criterion7(const std::vector<GridPoint>& dense, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  // synthetic closure: planted eps_21k, data accurate to 1e-30
  {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1, 1);
    const int d = 60, K = 2, kmax = 8;
    std::vector<BigReal> planted;
    for (int k = K + 1; k <= kmax; ++k) planted.emplace_back(u(gen) * std::pow(30.0, k), d);
    std::vector<DeltaRecord> recs;
    for (const auto& g : log_grid(BigReal(kGridLo, d), BigReal(kGridHi, d), 24, d)) {
      BigReal s(0L, d);
      for (int k = K + 1; k <= kmax; ++k) s += planted[static_cast<std::size_t>(k - K - 1)] * pow(g, k);
      DeltaRecord r;
      r.g = g;
      r.K = K;
      r.delta_I = -s + abs(s) * BigReal(u(gen) * 1e-30, d);
      r.delta_I_error = abs(s) * BigReal(1e-30, d);
      recs.push_back(r);
    }
    const auto est = extract_coefficients(recs, Channel::imaginary, c, kmax);
    bool covered = true;
    for (const auto& e : est) covered = covered && abs(e.value - planted[static_cast<std::size_t>(e.k - K - 1)]) <= e.error;
    o.require(covered, "synthetic closure outside error bars");
    o.detail << " synthetic closure " << (covered ? "covered" : "NOT covered") << ";";
  }
  auto check = [&](const std::vector<CoefficientEstimate>& est, int k, const BigReal& truth, double tol, bool relative,
                   const std::string& label) {
    for (const auto& e : est) {
      if (e.l != 1 || e.k != k) continue;
      const BigReal dev = abs(e.value - truth) / (relative ? abs(truth) : BigReal(1L, 30));
      o.detail << " " << label << " = " << e.value.to_string(10) << " +- " << e.error.to_string(2) << " ("
               << (relative ? "rel " : "abs ") << dev.to_string(2) << ");";
      o.require(dev.to_double() <= tol, label + " outside tolerance");
      return;
    }
    o.require(false, label + " not extracted");
  };
  try {
    std::vector<GridPoint> imag;
    for (const auto& p : dense) {
      if (p.g.to_double() <= kImagExtractHi * (1 + 1e-12)) imag.push_back(p);
    }
    const auto est = extract_coefficients(delta_records(imag, 2, Branch::upper, c, kDigits), Channel::imaginary, c, 10);
    check(est, 3, c.value({2, 1, 3}, 60), kEps213Rel, true, "eps_213");
  } catch (const FitError& e) {
    o.require(false, std::string("imaginary extraction: ") + e.what());
  }
  try {
    ExtractOptions opt;
    opt.real_l0_given = 6;
    const auto est = extract_coefficients(delta_records(dense, -1, Branch::upper, c, kDigits), Channel::real, c, 7, opt);
    check(est, 0, BigReal(1L, 60), kEps210Abs, false, "eps_210");
    check(est, 1, c.value({2, 1, 1}, 60), kEps211Rel, true, "eps_211");
  } catch (const FitError& e) {
    o.require(false, std::string("real extraction: ") + e.what());
  }
  report(7, "coefficient extraction", o, seconds_since(t0));
}

void criterion8(const std::vector<GridPoint>& grid, const std::vector<GridPoint>& dense, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  constexpr int K = 10;
  double worst_gain = HUGE_VAL;
  std::size_t n = 0;
  for (const auto& p : dense) {
    const double g = p.g.to_double();
    if (!(g > kImproveLo && g < kImproveHi)) continue;
    ++n;
    const auto eb = make_borel_energy(p.borel, Branch::upper);
    const auto trunc = delta_records({p}, K, Branch::upper, c, kDigits).front();
    const auto imp = borel_improved_delta(p.g, K, eb, c, std::nullopt, kDigits);
    worst_gain = std::min(worst_gain, (abs(trunc.delta_I) / abs(imp.delta_I)).to_double());
  }
  o.detail << " min improvement on (0.005, 0.009) = " << fmt(worst_gain, 3) << "x over " << n << " couplings;";
  o.require(n > 0 && worst_gain >= kImprovement, "improvement >= 10x");
  double lo = HUGE_VAL, hi = 0;
  std::size_t m = 0;
  for (const auto& p : grid) {
    if (!(p.g.to_double() > 0.02)) continue;
    ++m;
    const auto imp = borel_improved_delta(p.g, K, make_borel_energy(p.borel, Branch::upper), c, std::nullopt, kDigits);
    const BigReal floor = n4_leading_bound(p.g, kDigits) / imaginary_scale(p.g, kDigits);
    const double r = (abs(imp.delta_I) / floor).to_double();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  o.detail << " |Delta_I| / n=4 floor for g > 0.02 in [" << fmt(lo, 3) << ", " << fmt(hi, 3) << "] over " << m
           << " couplings";
  o.require(m > 0 && lo >= kFloorBand && hi <= 1 / kFloorBand, "residual at the n=4 floor within a factor 2");
  report(8, "instanton Borel improvement", o, seconds_since(t0));
}

void criterion9(const PadeApproximant& p200, const InstantonCoefficients& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const int d = kSymmetryDigits;
  const auto f = RationalFunction::from(p200, d + pade_guard_digits(kOrder));
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(std::log(kGridLo), std::log(kGridHi));
  double worst = 0;
  std::size_t exact_two = 0;
  for (int i = 0; i < kSymmetryCouplings; ++i) {
    const BigReal g(std::exp(u(gen)), d);
    const auto up = inverse_borel(f, g, ContourSpec::standard(Branch::upper), d);
    const auto lo = inverse_borel(f, g, ContourSpec::standard(Branch::lower), d);
    const BigReal mag = abs(up.value);
    const double dev = (max(abs(up.value.re - lo.value.re), abs(up.value.im + lo.value.im)) / mag).to_double();
    const double tol = 10 * std::max({up.quad_tol_achieved, lo.quad_tol_achieved, std::pow(10.0, -(d - 10))});
    worst = std::max(worst, dev / tol);
    if (dev > tol) o.require(false, "Borel sums not conjugate at g=" + g.to_string(6));
    const auto e2u = two_instanton_truncated(g, 6, Branch::upper, c, d);
    const auto e2l = two_instanton_truncated(g, 6, Branch::lower, c, d);
    if (e2u.value.re == e2l.value.re && e2u.value.im == -e2l.value.im) ++exact_two;
  }
  o.require(exact_two == static_cast<std::size_t>(kSymmetryCouplings), "two-instanton terms not conjugate");
  o.detail << " " << kSymmetryCouplings << " couplings, worst Borel deviation / tolerance = " << fmt(worst, 3)
           << ", two-instanton exact at " << exact_two;
  report(9, "branch symmetry", o, seconds_since(t0));
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  const auto t0 = std::chrono::steady_clock::now();
  const auto coeffs = known_coefficients();

  const auto series = compute_rs_coefficients(kOrder);
  criterion1(series);

  std::cerr << "pade [100/100]...\n";
  const auto p200 = pade_diagonal(borel_transform(series));
  criterion2(series, p200);

  std::cerr << "desk grid...\n";
  const auto f = RationalFunction::from(p200, kDigits + pade_guard_digits(kOrder));
  const ContourSpec upper = ContourSpec::standard(Branch::upper);
  const auto grid = evaluate_grid(f, log_grid(BigReal(kGridLo, kDigits), BigReal(kGridHi, kDigits), kGridPoints, kDigits),
                                  upper, kDigits, kFockDigits);
  criterion3(grid, coeffs);
  criterion4(grid, coeffs);
  criterion5(grid, coeffs);

  criterion6();

  std::cerr << "dense grid...\n";
  const auto dense = evaluate_grid(
      f, log_grid(BigReal(kDenseLo, kDigits), BigReal(kDenseHi, kDigits), kDensePoints, kDigits), upper, kDigits,
      kFockDigits);
  criterion7(dense, coeffs);
  criterion8(grid, dense, coeffs);
  criterion9(p200, coeffs);

  std::size_t passed = 0;
  for (const auto& [id, ok] : results) passed += ok ? 1 : 0;
  std::cout << passed << "/" << results.size() << " criteria passed in " << std::fixed << std::setprecision(0)
            << seconds_since(t0) << " s" << std::endl;
  return passed == results.size() ? 0 : 1;
}
