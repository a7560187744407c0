#include "support.hpp"

#include <dwr/analysis.hpp>

using namespace dwr;

namespace {
DeltaRecord record(const BigReal& g, int K, BigReal di, std::optional<BigReal> dr, const BigReal& err) {
  DeltaRecord r;
  r.g = g;
  r.K = K;
  r.delta_I = std::move(di);
  r.delta_I_error = err;
  if (dr) {
    r.delta_R = std::move(dr);
    r.delta_R_error = err;
  }
  return r;
}
}  // namespace

TEST(LogGrid, EndpointsAndRatio) {
  const int d = 40;
  const auto g = log_grid(BigReal(0.005, d), BigReal(0.05, d), 12, d);
  ASSERT_EQ(g.size(), 12u);
  EXPECT_EQ(g.front(), BigReal(0.005, d));
  EXPECT_EQ(g.back(), BigReal(0.05, d));
  for (std::size_t i = 2; i < g.size(); ++i) {
    EXPECT_TRUE(test::near_rel(g[i] / g[i - 1], g[1] / g[0], pow10(-d + 5, d)));
  }
  EXPECT_THROW(log_grid(BigReal(0.05, d), BigReal(0.005, d), 5, d), std::invalid_argument);
  EXPECT_THROW(log_grid(BigReal(0.005, d), BigReal(0.05, d), 1, d), std::invalid_argument);
}

TEST(SlopeFit, ExactPowerLaw) {
  const int d = 40;
  std::vector<std::pair<BigReal, BigReal>> pts;
  for (const auto& g : log_grid(BigReal(0.005, d), BigReal(0.05, d), 10, d)) pts.push_back({g, -3L * pow(g, 3)});
  const auto f = fit_loglog_slope(pts);
  EXPECT_NEAR(f.slope, 3.0, 1e-12);
  EXPECT_LT(f.stderr_, 1e-10);
  EXPECT_NEAR(f.residual_mean, 0.0, 1e-12);
  EXPECT_EQ(f.count, 10u);
  const auto w = fit_loglog_slope(pts, std::make_pair(0.01, 0.05));
  EXPECT_LT(w.count, 10u);
  EXPECT_GE(w.g_lo, 0.01);
}

TEST(SlopeFit, RejectsZeroAndSignFlip) {
  const int d = 30;
  std::vector<std::pair<BigReal, BigReal>> pts;
  for (int i = 1; i <= 5; ++i) pts.push_back({BigReal(0.01 * i, d), BigReal(1e-3 * i, d)});
  auto zero = pts;
  zero[2].second = BigReal(0L, d);
  EXPECT_THROW(fit_loglog_slope(zero), FitError);
  auto flip = pts;
  flip[3].second = -flip[3].second;
  try {
    fit_loglog_slope(flip);
    FAIL();
  } catch (const FitError& e) {
    EXPECT_NE(std::string(e.what()).find("4.00000e-2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(fit_loglog_slope({pts[0], pts[1]}), FitError);
}

TEST(LeastSquares, RecoversExactSolution) {
  const int d = 50;
  std::vector<std::vector<BigReal>> a;
  std::vector<BigReal> y, dy;
  for (int i = 0; i < 8; ++i) {
    const BigReal x(0.1 * (i + 1), d);
    a.push_back({BigReal(1L, d), x, x * x});
    y.push_back(2L - 3L * x + 5L * x * x);
    dy.push_back(BigReal(0L, d));
  }
  const auto ls = detail::least_squares(a, y, dy, d);
  EXPECT_TRUE(test::near_abs(ls.coef[0], BigReal(2L, d), pow10(-d + 8, d)));
  EXPECT_TRUE(test::near_abs(ls.coef[1], BigReal(-3L, d), pow10(-d + 8, d)));
  EXPECT_TRUE(test::near_abs(ls.coef[2], BigReal(5L, d), pow10(-d + 8, d)));
  EXPECT_GT(ls.condition, 1.0);
  a.resize(2);
  EXPECT_THROW(detail::least_squares(a, y, dy, d), FitError);
}

TEST(Delta, BranchMismatchRejected) {
  const int d = 40;
  const BigReal g(0.01, d);
  BorelEnergy eb;
  eb.value = BigComplex{BigReal(0.5, d), BigReal(0L, d)};
  eb.branch = Branch::lower;
  eb.digits = d;
  eb.error = BigReal(0L, d);
  const auto e2 = two_instanton_truncated(g, 0, Branch::upper, known_coefficients(), d);
  EXPECT_THROW(compute_delta(g, 0, eb, e2, std::nullopt, d), BranchMismatchError);
}

TEST(Delta, NormalizationAndFockField) {
  const int d = 50;
  const BigReal g(0.01, d);
  const auto c = known_coefficients();
  const auto e2 = two_instanton_truncated(g, 0, Branch::upper, c, d);
  BorelEnergy eb;
  // Borel value that cancels the imaginary part exactly and sits 1 real_scale above Fock
  FockResult fr;
  fr.g = g;
  fr.digits = 60;
  fr.mean = BigReal(0.49, d);
  eb.value = BigComplex{fr.mean - e2.value.re + real_scale(g, d), -e2.value.im};
  eb.branch = Branch::upper;
  eb.digits = d;
  eb.error = BigReal(0L, d);
  const auto r = compute_delta(g, 0, eb, e2, fr, d);
  EXPECT_TRUE(abs(r.delta_I) < pow10(-d + 30, d));
  ASSERT_TRUE(r.delta_R.has_value());
  EXPECT_TRUE(test::near_abs(*r.delta_R, BigReal(1L, d), pow10(-d + 30, d)));
  EXPECT_FALSE(compute_delta(g, 0, eb, e2, std::nullopt, d).delta_R.has_value());
}

TEST(Extraction, SyntheticClosureImaginary) {
  const int d = 60, K = 1, kmax = 6;
  const auto known = known_coefficients();
  std::vector<BigReal> planted;
  for (int k = K + 1; k <= kmax; ++k) planted.emplace_back(test::uniform(-1e3, 1e3) * std::pow(10.0, k), d);
  std::vector<DeltaRecord> recs;
  for (const auto& g : log_grid(BigReal(0.005, d), BigReal(0.05, d), 20, d)) {
    BigReal s(0L, d);
    for (int k = K + 1; k <= kmax; ++k) s += planted[static_cast<std::size_t>(k - K - 1)] * pow(g, k);
    const BigReal noise = abs(s) * BigReal(test::uniform(-1, 1) * 1e-30, d);
    recs.push_back(record(g, K, -s + noise, std::nullopt, abs(s) * BigReal(1e-30, d)));
  }
  const auto est = extract_coefficients(recs, Channel::imaginary, known, kmax);
  ASSERT_EQ(est.size(), static_cast<std::size_t>(kmax - K));
  for (const auto& e : est) {
    const BigReal& truth = planted[static_cast<std::size_t>(e.k - K - 1)];
    EXPECT_EQ(e.l, 1);
    EXPECT_LE(abs(e.value - truth), e.error) << "k = " << e.k;
    EXPECT_TRUE(test::near_rel(e.value, truth, BigReal(1e-15, d))) << "k = " << e.k;
  }
}

TEST(Extraction, SyntheticClosureReal) {
  const int d = 80, K = 0, kmax = 3;
  const auto known = known_coefficients();
  std::vector<std::pair<BigReal, BigReal>> planted;  // (eps_20k, eps_21k)
  for (int k = K + 1; k <= kmax; ++k)
    planted.push_back({BigReal(test::uniform(-100, 100), d), BigReal(test::uniform(-100, 100), d)});
  std::vector<DeltaRecord> recs;
  for (const auto& g : log_grid(BigReal(0.005, d), BigReal(0.05, d), 20, d)) {
    const BigReal L = log(2L / g);
    BigReal s(0L, d);
    for (int k = K + 1; k <= kmax; ++k) {
      const auto& [a, b] = planted[static_cast<std::size_t>(k - K - 1)];
      s += (a + L * b) * pow(g, k);
    }
    recs.push_back(record(g, K, BigReal(0L, d), -s / L, abs(s) * BigReal(1e-30, d)));
  }
  ExtractOptions opt;
  opt.digits = d;
  const auto est = extract_coefficients(recs, Channel::real, known, kmax, opt);
  ASSERT_EQ(est.size(), static_cast<std::size_t>(2 * (kmax - K)));
  for (const auto& e : est) {
    const auto& p = planted[static_cast<std::size_t>(e.k - K - 1)];
    const BigReal& truth = e.l == 0 ? p.first : p.second;
    EXPECT_LE(abs(e.value - truth), e.error) << "l = " << e.l << " k = " << e.k;
    EXPECT_TRUE(test::near_rel(e.value, truth, BigReal(1e-12, d))) << "l = " << e.l << " k = " << e.k;
  }
}

TEST(Extraction, Preconditions) {
  const int d = 40;
  const auto known = known_coefficients();
  std::vector<DeltaRecord> recs;
  for (const auto& g : log_grid(BigReal(0.005, d), BigReal(0.05, d), 4, d))
    recs.push_back(record(g, 0, pow(g, 1), std::nullopt, BigReal(0L, d)));
  EXPECT_THROW(extract_coefficients(recs, Channel::imaginary, known, 5), FitError);
  EXPECT_THROW(extract_coefficients(recs, Channel::imaginary, known, 0), std::invalid_argument);
  EXPECT_THROW(extract_coefficients(recs, Channel::real, known, 1), std::invalid_argument);
  recs[1].K = 1;
  EXPECT_THROW(extract_coefficients(recs, Channel::imaginary, known, 2), std::invalid_argument);
  EXPECT_THROW(extract_coefficients({}, Channel::imaginary, known, 2), FitError);
}

TEST(Extraction, ChannelNames) {
  EXPECT_EQ(parse_channel("real"), Channel::real);
  EXPECT_EQ(parse_channel("imaginary"), Channel::imaginary);
  EXPECT_THROW(parse_channel("both"), std::invalid_argument);
}

TEST(ImprovedTwoInstanton, NeedsFourCoefficients) {
  const BigReal g(0.01, 60);
  EXPECT_THROW(two_instanton_resummed(g, 2, Branch::upper, known_coefficients(), 60), std::invalid_argument);
}

TEST(ImprovedTwoInstanton, ConjugateBranches) {
  const int d = 50;
  const auto c = known_coefficients();
  for (double gd : {0.006, 0.012, 0.03}) {
    const BigReal g(gd, d);
    const auto up = two_instanton_resummed(g, 10, Branch::upper, c, d);
    const auto lo = two_instanton_resummed(g, 10, Branch::lower, c, d);
    EXPECT_TRUE(test::near_rel(up.value.re, lo.value.re, pow10(-d + 15, d)));
    EXPECT_TRUE(test::near_rel(up.value.im, -lo.value.im, pow10(-d + 15, d)));
    EXPECT_FALSE(up.s20_resummed);
  }
}
