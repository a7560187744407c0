#pragma once

// Glue shared by the command-line tool and the acceptance run: a cached
// perturbative series, and the per-g evaluation of the lateral Borel sum
// together with the converged cut-Fock energy.

#include <dwr/analysis.hpp>
#include <dwr/borel.hpp>
#include <dwr/fock.hpp>
#include <dwr/perturbation.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

inline constexpr const char* kCacheEnv = "DWR_CACHE_DIR";

/// $DWR_CACHE_DIR, else ./.dwr-cache.
inline std::filesystem::path cache_directory() {
  if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
  return ".dwr-cache";
}

inline std::filesystem::path series_cache_path(const std::filesystem::path& dir) { return dir / "rs_coefficients.tsv"; }

struct CachedSeries {
  PerturbationSeries series;
  bool cache_hit = false;
};

/// eps_0..eps_K, read from the cache when it is long enough; otherwise the
/// recursion is rerun and the cache rewritten with the longer series.
inline CachedSeries cached_series(std::size_t K, const std::optional<std::filesystem::path>& dir) {
  if (dir) {
    const auto path = series_cache_path(*dir);
    if (std::filesystem::exists(path)) {
      PerturbationSeries s = load_series(path.string(), std::nullopt, nullptr);
      if (!s.coeffs.empty() && s.order() >= K) return {s.truncated(K), true};
    }
  }
  CachedSeries out{compute_rs_coefficients(K), false};
  if (dir) {
    std::filesystem::create_directories(*dir);
    save_series(out.series, series_cache_path(*dir).string());
  }
  return out;
}

inline std::filesystem::path pade_cache_path(const std::filesystem::path& dir, std::size_t K) {
  return dir / ("pade_" + std::to_string(K) + ".tsv");
}

/// Diagonal Pade approximant of the Borel series of order K, cached as
/// "num|den<TAB>i<TAB>p/q" lines next to the series.
inline PadeApproximant cached_pade(std::size_t K, const std::optional<std::filesystem::path>& dir) {
  if (dir && std::filesystem::exists(pade_cache_path(*dir, K))) {
    const auto path = pade_cache_path(*dir, K).string();
    std::ifstream in(path);
    PadeApproximant p;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string part, idx, val;
      if (!std::getline(ls, part, '\t') || !std::getline(ls, idx, '\t') || !std::getline(ls, val)) {
        throw ParseError(path, lineno, "expected 'num|den<TAB>i<TAB>p/q'");
      }
      auto& target = part == "num" ? p.numerator : p.denominator;
      if ((part != "num" && part != "den") || idx != std::to_string(target.size())) {
        throw ParseError(path, lineno, "entry out of sequence");
      }
      try {
        target.push_back(parse_rational(val));
      } catch (const std::exception& e) {
        throw ParseError(path, lineno, e.what());
      }
    }
    if (p.order() == K && !p.denominator.empty()) return p;
  }
  PadeApproximant p = pade_diagonal(borel_transform(cached_series(K, dir).series));
  if (dir) {
    std::filesystem::create_directories(*dir);
    std::ofstream out(pade_cache_path(*dir, K));
    for (std::size_t i = 0; i < p.numerator.size(); ++i) out << "num\t" << i << '\t' << to_string(p.numerator[i]) << '\n';
    for (std::size_t i = 0; i < p.denominator.size(); ++i) out << "den\t" << i << '\t' << to_string(p.denominator[i]) << '\n';
  }
  return p;
}

/// Lateral sum on the contour's branch. The upper branch is the one that is
/// integrated; the lower one is its complex conjugate.
inline LateralSum lateral_sum(const RationalFunction& pade, const BigReal& g, const ContourSpec& contour, int digits) {
  if (contour.branch == Branch::upper) return inverse_borel(pade, g, contour, digits);
  LateralSum s = inverse_borel(pade, g, contour.mirrored(), digits);
  s.value = conj(s.value);
  return s;
}

struct GridPoint {
  BigReal g;
  LateralSum borel;
  std::optional<FockResult> fock;
};

/// Lateral Borel-Pade sum at every g, and the cut-Fock mean when fock_digits
/// is set. `pade` must carry digits + pade_guard_digits(K).
inline std::vector<GridPoint> evaluate_grid(const RationalFunction& pade, const std::vector<BigReal>& grid,
                                            const ContourSpec& contour, int digits, std::optional<int> fock_digits) {
  std::vector<GridPoint> out;
  out.reserve(grid.size());
  for (const auto& g : grid) {
    GridPoint p{g, lateral_sum(pade, g, contour, digits), std::nullopt};
    if (fock_digits) p.fock = fock_energy_converged(g, *fock_digits);
    out.push_back(std::move(p));
  }
  return out;
}

/// Delta records for truncation order K. Each l channel stops at its last
/// tabulated coefficient, so K = 10 uses eps_20k only through k = 6.
inline std::vector<DeltaRecord> delta_records(const std::vector<GridPoint>& grid, int K, Branch branch,
                                              const InstantonCoefficients& coeffs, int digits) {
  std::vector<DeltaRecord> out;
  for (const auto& p : grid) {
    const auto eb = make_borel_energy(p.borel, branch);
    const std::array<int, 2> orders{std::min(K, coeffs.max_contiguous_k(2, 0)), std::min(K, coeffs.max_contiguous_k(2, 1))};
    auto e2 = two_instanton_truncated(p.g, orders, branch, coeffs, digits);
    e2.K = K;
    out.push_back(compute_delta(p.g, K, eb, e2, p.fock, digits));
  }
  return out;
}

}  // namespace dwr
