// Command-line front end: perturbative coefficients, lateral Borel sums, Pade
// poles, cut-Fock energies, residuals, fits and coefficient extraction.
//
// Exit status: 0 success, 1 usage error, 2 numerical failure (JSON on stderr).

#include <dwr/dwr.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dwr;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// small helpers

BigReal parse_coupling(const std::string& text, int digits) {
  BigReal g(0L, digits);
  try {
    g = BigReal::parse(text, digits);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(g > 0L)) throw UsageError("coupling must be positive, got " + text);
  return g;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

ContourSpec make_contour(Branch branch, const std::optional<std::string>& angle, const std::optional<std::string>& t_cut) {
  ContourSpec c = ContourSpec::standard(branch);
  try {
    if (angle) c.angle_over_pi = parse_rational(*angle);
    if (t_cut) c.t_cut = parse_rational(*t_cut);
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("contour: ") + e.what());
  }
  return c;
}

std::optional<fs::path> cache_dir(const std::string& flag, bool disabled) {
  if (disabled) return std::nullopt;
  if (!flag.empty()) return fs::path(flag);
  return cache_directory();
}

// Output goes to `path` when given, else to stdout. Files are written whole at the end.
void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << text;
}

std::string str(const BigReal& x, int digits) { return x.to_string(digits); }

// ---------------------------------------------------------------------------
// record formats

json fock_json(const FockResult& r) {
  return json{{"g", str(r.g, 20)},  {"M", r.cutoff},         {"digits", r.digits},
              {"E0", str(r.e0, r.digits)}, {"E1", str(r.e1, r.digits)}, {"mean", str(r.mean, r.digits)}};
}

std::string delta_csv(const std::vector<DeltaRecord>& recs, int digits) {
  std::ostringstream os;
  os << "g,K,delta_I,delta_R,delta_I_error,delta_R_error,digits\n";
  for (const auto& r : recs) {
    os << str(r.g, 20) << ',' << r.K << ',' << str(r.delta_I, digits) << ','
       << (r.delta_R ? str(*r.delta_R, digits) : "") << ',' << str(r.delta_I_error, 6) << ','
       << (r.delta_R_error ? str(*r.delta_R_error, 6) : "") << ',' << digits << '\n';
  }
  return os.str();
}

std::vector<DeltaRecord> read_delta_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UsageError("'" + path + "' is empty");
  std::map<std::string, std::size_t> col;
  {
    std::stringstream ss(line);
    std::string name;
    for (std::size_t i = 0; std::getline(ss, name, ','); ++i) col[trim(name)] = i;
  }
  for (const char* need : {"g", "K", "delta_I", "delta_R", "digits"}) {
    if (!col.count(need)) throw UsageError("'" + path + "' lacks column '" + need + "'");
  }
  std::vector<DeltaRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    f.resize(col.size());
    try {
      const int d = std::stoi(f[col["digits"]]);
      DeltaRecord r;
      r.g = BigReal::parse(f[col["g"]], d);
      r.K = std::stoi(f[col["K"]]);
      r.delta_I = BigReal::parse(f[col["delta_I"]], d);
      r.delta_I_error = col.count("delta_I_error") && !f[col["delta_I_error"]].empty()
                            ? BigReal::parse(f[col["delta_I_error"]], d)
                            : BigReal(0L, d);
      if (!f[col["delta_R"]].empty()) {
        r.delta_R = BigReal::parse(f[col["delta_R"]], d);
        r.delta_R_error = col.count("delta_R_error") && !f[col["delta_R_error"]].empty()
                              ? BigReal::parse(f[col["delta_R_error"]], d)
                              : BigReal(0L, d);
      }
      r.borel_digits = d;
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw UsageError("'" + path + "' has no data rows");
  return out;
}

json fit_json(const SlopeFit& f, int K, Channel ch, int digits) {
  return json{{"K", K},
              {"channel", to_string(ch)},
              {"slope", f.slope},
              {"stderr", f.stderr_},
              {"window", {f.g_lo, f.g_hi}},
              {"points", f.count},
              {"digits", digits}};
}

SlopeFit fit_channel(const std::vector<DeltaRecord>& recs, Channel ch, std::optional<std::pair<double, double>> window) {
  std::vector<std::pair<BigReal, BigReal>> pts;
  for (const auto& r : recs) {
    if (ch == Channel::imaginary) {
      pts.push_back({r.g, r.delta_I});
    } else {
      if (!r.delta_R) throw UsageError("real-channel fit needs delta_R in every row");
      pts.push_back({r.g, *r.delta_R});
    }
  }
  return fit_loglog_slope(pts, window);
}

std::string estimates_csv(const std::vector<CoefficientEstimate>& est, int digits) {
  std::ostringstream os;
  os << "l,k,value,error,digits\n";
  for (const auto& e : est) {
    os << e.l << ',' << e.k << ',' << str(e.value, 20) << ',' << str(e.error, 4) << ',' << digits << '\n';
  }
  return os.str();
}

std::string scan_csv(const std::vector<ScanRow>& rows, std::size_t levels, int digits) {
  std::ostringstream os;
  os << "M";
  for (std::size_t i = 0; i < levels; ++i) os << ",e" << i;
  os << ",digits\n";
  for (const auto& r : rows) {
    os << r.cutoff;
    for (std::size_t i = 0; i < levels; ++i) os << ',' << (i < r.eigenvalues.size() ? str(r.eigenvalues[i], digits) : "");
    os << ',' << digits << '\n';
  }
  return os.str();
}

std::string series_csv(const PerturbationSeries& s, int digits) {
  std::ostringstream os;
  os << "k,eps,decimal,asymptotic_ratio,digits\n";
  for (std::size_t k = 0; k <= s.order(); ++k) {
    os << k << ',' << to_string(s[k]) << ',' << str(BigReal(s[k], digits), digits) << ','
       << (k > 0 ? str(asymptotic_ratio(s, k, digits), digits) : "") << ',' << digits << '\n';
  }
  return os.str();
}

std::string poles_csv(const PoleReport& rep) {
  std::ostringstream os;
  os << "re,im,residue_re,residue_im,modulus,spurious,digits\n";
  for (const auto& p : rep.poles) {
    os << str(p.location.re, rep.digits) << ',' << str(p.location.im, rep.digits) << ','
       << str(p.residue.re, rep.digits) << ',' << str(p.residue.im, rep.digits) << ','
       << str(abs(p.location), rep.digits) << ',' << (p.spurious ? 1 : 0) << ',' << rep.digits << '\n';
  }
  return os.str();
}

int check_digits(int digits, const BigReal& g_min) {
  const int need = required_digits(g_min, 1);
  if (digits < need) {
    throw UsageError(std::to_string(digits) + " digits cannot resolve e^{-1/3g} at g = " + g_min.to_string(6) +
                     "; need at least " + std::to_string(need));
  }
  return digits;
}

std::vector<BigReal> grid_from(const std::vector<std::string>& gs, const std::string& g_min, const std::string& g_max,
                               std::size_t points, int digits) {
  std::vector<BigReal> grid;
  if (!gs.empty()) {
    for (const auto& s : gs) grid.push_back(parse_coupling(s, digits));
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw UsageError("couplings must be strictly increasing");
    }
    return grid;
  }
  if (g_min.empty() || g_max.empty()) throw UsageError("give --g or both --g-min and --g-max");
  const BigReal lo = parse_coupling(g_min, digits), hi = parse_coupling(g_max, digits);
  if (!(hi > lo)) throw UsageError("--g-max must exceed --g-min");
  if (points < 2) throw UsageError("--points must be at least 2");
  return log_grid(lo, hi, points, digits);
}

// ---------------------------------------------------------------------------
// configuration file for the pipeline: flat key=value, '#' comments

struct PipelineConfig {
  std::size_t order = 200;
  int digits = 80;
  int fock_digits = 70;
  std::string g_min = "0.005", g_max = "0.05";
  std::size_t points = 12;
  std::vector<int> orders{0, 1, 2};
  Branch branch = Branch::upper;
  std::optional<std::string> theta_over_pi, t_cut;
  int improved_K = 10;
  std::size_t improved_points = 12;
  std::string improved_g_min = "0.005", improved_g_max = "0.05";
  bool extract = true;
  std::string extract_g_min = "0.005", extract_g_max = "0.01";
  std::size_t extract_points = 30;
  std::string extract_imaginary_g_max = "0.008";
  int extract_imaginary_K = 2, extract_imaginary_k_max = 10;
  int extract_real_K = -1, extract_real_k_max = 7, extract_real_l0_given = 6;
  std::string scan_g;  // empty: no scan
  std::vector<std::size_t> scan_cutoffs{50, 100, 200, 400};
  std::size_t scan_levels = 40;
  int scan_digits = 30;
  std::string out = "report";
};

PipelineConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  PipelineConfig c;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw UsageError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      if (key == "order") c.order = std::stoul(val);
      else if (key == "digits") c.digits = std::stoi(val);
      else if (key == "fock_digits") c.fock_digits = std::stoi(val);
      else if (key == "g_min") c.g_min = val;
      else if (key == "g_max") c.g_max = val;
      else if (key == "points") c.points = std::stoul(val);
      else if (key == "orders") {
        c.orders.clear();
        for (const auto& s : split(val, ',')) c.orders.push_back(std::stoi(trim(s)));
      }
      else if (key == "branch") c.branch = parse_branch(val);
      else if (key == "theta_over_pi") c.theta_over_pi = val;
      else if (key == "t_cut") c.t_cut = val;
      else if (key == "improved_K") c.improved_K = std::stoi(val);
      else if (key == "improved_points") c.improved_points = std::stoul(val);
      else if (key == "improved_g_min") c.improved_g_min = val;
      else if (key == "improved_g_max") c.improved_g_max = val;
      else if (key == "extract") c.extract = val == "true" || val == "1" || val == "yes";
      else if (key == "extract_g_min") c.extract_g_min = val;
      else if (key == "extract_g_max") c.extract_g_max = val;
      else if (key == "extract_points") c.extract_points = std::stoul(val);
      else if (key == "extract_imaginary_g_max") c.extract_imaginary_g_max = val;
      else if (key == "extract_imaginary_K") c.extract_imaginary_K = std::stoi(val);
      else if (key == "extract_imaginary_k_max") c.extract_imaginary_k_max = std::stoi(val);
      else if (key == "extract_real_K") c.extract_real_K = std::stoi(val);
      else if (key == "extract_real_k_max") c.extract_real_k_max = std::stoi(val);
      else if (key == "extract_real_l0_given") c.extract_real_l0_given = std::stoi(val);
      else if (key == "scan_g") c.scan_g = val;
      else if (key == "scan_cutoffs") {
        c.scan_cutoffs.clear();
        for (const auto& s : split(val, ',')) c.scan_cutoffs.push_back(std::stoul(trim(s)));
      }
      else if (key == "scan_levels") c.scan_levels = std::stoul(val);
      else if (key == "scan_digits") c.scan_digits = std::stoi(val);
      else if (key == "out") c.out = val;
      else throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// pipeline

struct Report {
  fs::path dir;
  std::vector<std::string> files;
  std::vector<std::string> failures;

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    out << text;
    files.push_back(name);
  }
};

int run_pipeline(const PipelineConfig& c, const std::optional<fs::path>& cache, std::ostream& log) {
  const int D = c.digits;
  const auto grid = grid_from({}, c.g_min, c.g_max, c.points, D);
  check_digits(D, grid.front());
  const ContourSpec contour = make_contour(c.branch, c.theta_over_pi, c.t_cut);
  Report rep{c.out, {}, {}};
  fs::create_directories(rep.dir);

  log << "series to order " << c.order << '\n';
  const auto series = cached_series(c.order, cache).series;
  rep.write("series.csv", series_csv(series, 30));
  {
    std::ostringstream os;
    write_coefficients_csv(os, known_coefficients());
    rep.write("instanton_coefficients.csv", os.str());
  }
  log << "pade [" << (c.order + 1) / 2 << "/" << c.order / 2 << "]\n";
  const auto pade = cached_pade(c.order, cache);
  rep.write("poles.csv", poles_csv(pade_poles(pade, 30)));
  const auto f = RationalFunction::from(pade, D + pade_guard_digits(c.order));

  const auto coeffs = known_coefficients();
  auto evaluate = [&](const std::vector<BigReal>& g) {
    log << "grid of " << g.size() << " points on [" << g.front().to_string(4) << ", " << g.back().to_string(4) << "]\n";
    return evaluate_grid(f, g, contour, D, c.fock_digits > 0 ? std::optional<int>(c.fock_digits) : std::nullopt);
  };
  const auto points = evaluate(grid);
  {
    std::ostringstream os;
    os << "g,re_borel,im_borel,quad_tol,fock_mean,fock_M,fock_digits,digits\n";
    for (const auto& p : points) {
      os << str(p.g, 20) << ',' << str(p.borel.value.re, D) << ',' << str(p.borel.value.im, D) << ','
         << p.borel.quad_tol_achieved << ',' << (p.fock ? str(p.fock->mean, p.fock->digits) : "") << ','
         << (p.fock ? std::to_string(p.fock->cutoff) : "") << ',' << (p.fock ? p.fock->digits : 0) << ',' << D << '\n';
    }
    rep.write("grid.csv", os.str());
  }

  for (int K : c.orders) {
    const auto recs = delta_records(points, K, c.branch, coeffs, D);
    rep.write("delta_K" + std::to_string(K) + ".csv", delta_csv(recs, 30));
    for (Channel ch : {Channel::imaginary, Channel::real}) {
      if (ch == Channel::real && c.fock_digits <= 0) continue;
      const std::string name = std::string("fit_") + to_string(ch) + "_K" + std::to_string(K) + ".json";
      try {
        rep.write(name, fit_json(fit_channel(recs, ch, std::nullopt), K, ch, D).dump(2) + "\n");
      } catch (const FitError& e) {
        rep.write(name, json{{"K", K}, {"channel", to_string(ch)}, {"error", e.what()}}.dump(2) + "\n");
        rep.failures.push_back(name + ": " + e.what());
      }
    }
  }

  if (c.improved_K >= 0) {
    const auto ig = grid_from({}, c.improved_g_min, c.improved_g_max, c.improved_points, D);
    const auto ipoints = ig.size() == grid.size() && c.improved_g_min == c.g_min && c.improved_g_max == c.g_max
                             ? points
                             : evaluate(ig);
    std::ostringstream os;
    os << "g,K,delta_I_truncated,delta_I_improved,n4_floor,digits\n";
    const auto trunc = delta_records(ipoints, c.improved_K, c.branch, coeffs, D);
    for (std::size_t i = 0; i < ipoints.size(); ++i) {
      const auto& p = ipoints[i];
      const auto eb = make_borel_energy(p.borel, c.branch);
      const auto imp = borel_improved_delta(p.g, c.improved_K, eb, coeffs, std::nullopt, D);
      const BigReal floor = n4_leading_bound(p.g, D) / imaginary_scale(p.g, D);
      os << str(p.g, 20) << ',' << c.improved_K << ',' << str(trunc[i].delta_I, 30) << ',' << str(imp.delta_I, 30)
         << ',' << str(floor, 30) << ',' << D << '\n';
    }
    rep.write("improved_K" + std::to_string(c.improved_K) + ".csv", os.str());
  }

  if (c.extract) {
    const auto eg = grid_from({}, c.extract_g_min, c.extract_g_max, c.extract_points, D);
    const auto epoints = evaluate(eg);
    const double imag_hi = std::stod(c.extract_imaginary_g_max);
    std::vector<GridPoint> imag_points;
    for (const auto& p : epoints) {
      if (p.g.to_double() <= imag_hi * (1 + 1e-12)) imag_points.push_back(p);
    }
    auto run = [&](const std::string& name, auto&& fn) {
      try {
        rep.write(name, fn());
      } catch (const FitError& e) {
        rep.failures.push_back(name + ": " + e.what());
      }
    };
    run("estimates_imaginary_K" + std::to_string(c.extract_imaginary_K) + ".csv", [&] {
      const auto recs = delta_records(imag_points, c.extract_imaginary_K, c.branch, coeffs, D);
      return estimates_csv(extract_coefficients(recs, Channel::imaginary, coeffs, c.extract_imaginary_k_max), D);
    });
    if (c.fock_digits > 0) {
      run("estimates_real_K" + std::to_string(c.extract_real_K) + ".csv", [&] {
        const auto recs = delta_records(epoints, c.extract_real_K, c.branch, coeffs, D);
        ExtractOptions opt;
        opt.real_l0_given = c.extract_real_l0_given;
        return estimates_csv(extract_coefficients(recs, Channel::real, coeffs, c.extract_real_k_max, opt), D);
      });
    }
  }

  if (!c.scan_g.empty()) {
    const BigReal g = parse_coupling(c.scan_g, c.scan_digits + 20);
    const auto rows = convergence_scan(g, c.scan_cutoffs, c.scan_levels, c.scan_digits);
    rep.write("scan.csv", scan_csv(rows, c.scan_levels, c.scan_digits));
  }

  json summary{{"order", c.order},   {"digits", D},
               {"fock_digits", c.fock_digits}, {"g_min", c.g_min},
               {"g_max", c.g_max},   {"points", c.points},
               {"branch", to_string(c.branch)}, {"theta_over_pi", to_string(contour.angle_over_pi)},
               {"t_cut", to_string(contour.t_cut)}, {"files", rep.files},
               {"failures", rep.failures}};
  std::ofstream(rep.dir / "summary.json") << summary.dump(2) << '\n';
  for (const auto& fail : rep.failures) std::cerr << json{{"error", "FitError"}, {"message", fail}}.dump() << '\n';
  return rep.failures.empty() ? 0 : 2;
}

json error_payload(const std::exception& e) {
  json j{{"message", e.what()}};
  if (const auto* fe = dynamic_cast<const FitError*>(&e)) {
    j["error"] = "FitError";
    if (fe->condition_estimate()) j["condition"] = *fe->condition_estimate();
  } else if (const auto* me = dynamic_cast<const MissingCoefficientError*>(&e)) {
    j["error"] = "MissingCoefficientError";
    j["index"] = me->index().label();
  } else if (dynamic_cast<const RootFindingError*>(&e)) {
    j["error"] = "RootFindingError";
  } else if (dynamic_cast<const QuadratureError*>(&e)) {
    j["error"] = "QuadratureError";
  } else if (dynamic_cast<const PadeDegenerateError*>(&e)) {
    j["error"] = "PadeDegenerateError";
  } else if (dynamic_cast<const FactorizationBreakdown*>(&e)) {
    j["error"] = "FactorizationBreakdown";
  } else if (dynamic_cast<const CapacityError*>(&e)) {
    j["error"] = "CapacityError";
  } else if (dynamic_cast<const NumericalError*>(&e)) {
    j["error"] = "NumericalError";
  } else if (dynamic_cast<const std::domain_error*>(&e)) {
    j["error"] = "DomainError";
  } else {
    j["error"] = "RuntimeError";
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"double-well Borel/instanton laboratory"};
  app.require_subcommand(1);
  std::string cache_flag;
  bool no_cache = false;
  app.add_option("--cache", cache_flag, std::string("cache directory (default $") + kCacheEnv + " or ./.dwr-cache)");
  app.add_flag("--no-cache", no_cache, "neither read nor write the cache");

  std::string out;
  int digits = 0;
  std::string g_text, g_min, g_max, branch_text = "upper", channel_text = "imaginary", input;
  std::vector<std::string> g_list;
  std::optional<std::string> theta, t_cut;
  std::size_t order = 0, points = 12, M = 0, levels = 10;
  std::vector<std::size_t> cutoffs;
  int K = 0, fock_digits = 0, k_max = 0;
  std::optional<int> l0_given;
  bool improved = false, instanton_table = false;
  std::optional<double> win_lo, win_hi;
  std::string config;

  auto* coeffs = app.add_subcommand("coeffs", "perturbative coefficients eps_k (cached)");
  coeffs->add_option("--order", order, "highest order K")->required();
  coeffs->add_flag("--instanton", instanton_table, "emit the two-instanton coefficient table instead");
  coeffs->add_option("-o,--out", out, "output file (default stdout)");

  auto* borel = app.add_subcommand("borel", "lateral Borel-Pade sum at one coupling");
  borel->add_option("--g", g_text, "coupling")->required();
  borel->add_option("--K", order, "perturbative order")->required();
  borel->add_option("--branch", branch_text, "upper or lower");
  borel->add_option("--digits", digits, "working digits (default: enough for 10 digits of e^{-1/3g})");
  borel->add_option("--theta-over-pi", theta, "ray angle as a rational multiple of pi");
  borel->add_option("--t-cut", t_cut, "cut of the ray (rational)");
  borel->add_option("-o,--out", out, "output file (default stdout)");

  auto* poles = app.add_subcommand("poles", "poles of the Borel-Pade approximant");
  poles->add_option("--K", order, "perturbative order")->required();
  poles->add_option("--digits", digits, "digits of the pole report")->default_val(30);
  poles->add_option("-o,--out", out, "output file (default stdout)");

  auto* fock = app.add_subcommand("fock", "ground doublet in the cut Fock space");
  fock->add_option("--g", g_text, "coupling")->required();
  fock->add_option("--M", M, "cut-off (default: doubled until converged)");
  fock->add_option("--digits", digits, "eigenvalue digits")->default_val(60);
  fock->add_option("-o,--out", out, "output file (default stdout)");

  auto* scan = app.add_subcommand("scan", "lowest eigenvalues against the cut-off");
  scan->add_option("--g", g_text, "coupling")->required();
  scan->add_option("--M", cutoffs, "ascending cut-offs")->required()->delimiter(',');
  scan->add_option("--levels", levels, "number of eigenvalues per row");
  scan->add_option("--digits", digits, "eigenvalue digits")->default_val(30);
  scan->add_option("-o,--out", out, "output file (default stdout)");

  auto* delta = app.add_subcommand("delta", "normalized residuals Delta_I, Delta_R on a grid");
  delta->add_option("--K", K, "two-instanton truncation order (-1: none)")->required();
  delta->add_option("--g", g_list, "explicit couplings (comma separated)")->delimiter(',');
  delta->add_option("--g-min", g_min, "grid start");
  delta->add_option("--g-max", g_max, "grid end");
  delta->add_option("--points", points, "log-spaced grid size");
  delta->add_option("--order", order, "perturbative order")->default_val(200);
  delta->add_option("--digits", digits, "working digits")->default_val(80);
  delta->add_option("--fock-digits", fock_digits, "Fock digits; 0 skips Delta_R")->default_val(70);
  delta->add_option("--branch", branch_text, "upper or lower");
  delta->add_option("--theta-over-pi", theta, "ray angle as a rational multiple of pi");
  delta->add_option("--t-cut", t_cut, "cut of the ray (rational)");
  delta->add_flag("--improved", improved, "replace the truncated l = 1 sum by its Borel sum");
  delta->add_option("-o,--out", out, "output file (default stdout)");

  auto* fit = app.add_subcommand("fit", "log-log slope of a residual");
  fit->add_option("--input", input, "delta CSV")->required();
  fit->add_option("--channel", channel_text, "imaginary or real");
  fit->add_option("--g-min", win_lo, "window start");
  fit->add_option("--g-max", win_hi, "window end");
  fit->add_option("-o,--out", out, "output file (default stdout)");

  auto* extract = app.add_subcommand("extract", "fit two-instanton coefficients beyond K");
  extract->add_option("--input", input, "delta CSV")->required();
  extract->add_option("--channel", channel_text, "imaginary or real");
  extract->add_option("--k-max", k_max, "highest coefficient in the model")->required();
  extract->add_option("--l0-given", l0_given, "real channel: take eps_20k from the table for k up to this");
  extract->add_option("--g-min", win_lo, "window start");
  extract->add_option("--g-max", win_hi, "window end");
  extract->add_option("--digits", digits, "fit digits")->default_val(60);
  extract->add_option("-o,--out", out, "output file (default stdout)");

  auto* pipeline = app.add_subcommand("pipeline", "full reproduction into a report directory");
  pipeline->add_option("--config", config, "key=value configuration file")->required();
  pipeline->add_option("-o,--out", out, "report directory (overrides 'out' in the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const auto cache = cache_dir(cache_flag, no_cache);
    const Branch branch = [&] {
      try {
        return parse_branch(branch_text);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }();

    if (*coeffs) {
      if (instanton_table) {
        std::ostringstream os;
        write_coefficients_csv(os, known_coefficients());
        emit(os.str(), out);
        return 0;
      }
      const auto s = cached_series(order, cache);
      std::cerr << (s.cache_hit ? "cache hit" : "computed") << ": eps_0..eps_" << order << '\n';
      emit(series_csv(s.series, 30), out);
    } else if (*borel) {
      const BigReal g = parse_coupling(g_text, 40);
      const int d = digits > 0 ? check_digits(digits, g) : required_digits(g, 10);
      if (order < 2) throw UsageError("--K must be at least 2");
      const ContourSpec c = make_contour(branch, theta, t_cut);
      const auto p = cached_pade(order, cache);
      const auto s = lateral_sum(RationalFunction::from(p, d + pade_guard_digits(order)), g.with_digits(d), c, d);
      json j{{"g", g_text},
             {"K", order},
             {"branch", to_string(branch)},
             {"theta_over_pi", to_string(c.angle_over_pi)},
             {"t_cut", to_string(c.t_cut)},
             {"digits", d},
             {"re", str(s.value.re, d)},
             {"im", str(s.value.im, d)},
             {"quad_tol", s.quad_tol_achieved},
             {"panels", s.panels}};
      emit(j.dump(2) + "\n", out);
    } else if (*poles) {
      if (order < 2) throw UsageError("--K must be at least 2");
      emit(poles_csv(pade_poles(cached_pade(order, cache), digits)), out);
    } else if (*fock) {
      const BigReal g = parse_coupling(g_text, digits + 20);
      const FockResult r = M > 0 ? fock_energy(g, M, digits) : fock_energy_converged(g, digits);
      emit(fock_json(r).dump(2) + "\n", out);
    } else if (*scan) {
      const BigReal g = parse_coupling(g_text, digits + 20);
      for (std::size_t i = 1; i < cutoffs.size(); ++i) {
        if (cutoffs[i] <= cutoffs[i - 1]) throw UsageError("--M cut-offs must ascend");
      }
      emit(scan_csv(convergence_scan(g, cutoffs, levels, digits), levels, digits), out);
    } else if (*delta) {
      const auto grid = grid_from(g_list, g_min, g_max, points, digits);
      check_digits(digits, grid.front());
      if (K < -1) throw UsageError("--K must be at least -1");
      const ContourSpec c = make_contour(branch, theta, t_cut);
      const auto f = RationalFunction::from(cached_pade(order, cache), digits + pade_guard_digits(order));
      const auto pts = evaluate_grid(f, grid, c, digits, fock_digits > 0 ? std::optional<int>(fock_digits) : std::nullopt);
      const auto coeffs_table = known_coefficients();
      std::vector<DeltaRecord> recs;
      if (improved) {
        for (const auto& p : pts) {
          recs.push_back(borel_improved_delta(p.g, K, make_borel_energy(p.borel, branch), coeffs_table, p.fock, digits));
        }
      } else {
        recs = delta_records(pts, K, branch, coeffs_table, digits);
      }
      emit(delta_csv(recs, 30), out);
    } else if (*fit) {
      const Channel ch = parse_channel(channel_text);
      const auto recs = read_delta_csv(input);
      std::optional<std::pair<double, double>> window;
      if (win_lo || win_hi) window = std::make_pair(win_lo.value_or(0.0), win_hi.value_or(1e300));
      emit(fit_json(fit_channel(recs, ch, window), recs.front().K, ch, recs.front().borel_digits).dump(2) + "\n", out);
    } else if (*extract) {
      const Channel ch = parse_channel(channel_text);
      auto recs = read_delta_csv(input);
      std::erase_if(recs, [&](const DeltaRecord& r) {
        const double g = r.g.to_double();
        return (win_lo && g < *win_lo) || (win_hi && g > *win_hi);
      });
      if (recs.empty()) throw UsageError("no rows inside the window");
      ExtractOptions opt;
      opt.digits = digits;
      opt.real_l0_given = l0_given;
      emit(estimates_csv(extract_coefficients(recs, ch, known_coefficients(), k_max, opt), recs.front().borel_digits),
           out);
    } else if (*pipeline) {
      PipelineConfig c = read_config(config);
      if (!out.empty()) c.out = out;
      return run_pipeline(c, cache, std::cerr);
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const BranchMismatchError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_payload(e).dump() << '\n';
    return 2;
  }
}
