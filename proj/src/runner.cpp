#include "lintest/runner.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lintest/divergence.hpp"
#include "lintest/errors.hpp"
#include "lintest/stat_tests.hpp"
#include "lintest/structured_cov.hpp"

namespace lintest {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* flag(bool b) { return b ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_floating_point_v<T>)
      os << num(xs[i]);
    else
      os << xs[i];
  }
  return os.str();
}

bool derives_b(const ExperimentConfig& cfg) { return !cfg.b.has_value(); }

double effective_b(const ExperimentConfig& cfg) {
  return cfg.b ? *cfg.b : select_b(cfg.kappa, cfg.alpha, cfg.beta);
}

void write_preamble(std::ostream& out, const std::string& header, const ExperimentConfig& cfg) {
  out << header << '\n';
  out << "# seed=" << cfg.seed << " fingerprint=" << fingerprint(cfg) << " config="
      << canonical_config(cfg) << '\n';
}

int report_invalid(const std::vector<std::string>& errs, std::ostream& log) {
  log << "invalid configuration:\n";
  for (const auto& e : errs) log << "  " << e << '\n';
  return kExitValidation;
}

Eigen::VectorXd random_signs(int len, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd s(len);
  for (int i = 0; i < len; ++i) s[i] = coin(rng) ? 1.0 : -1.0;
  return s;
}

// Entrywise max error relative to the largest entry of the reference.
OracleReport compare_matrices(std::string name, const Eigen::MatrixXd& closed,
                              const Eigen::MatrixXd& reference, double tol) {
  OracleReport r;
  r.name = std::move(name);
  r.closed_form = closed.norm();
  r.brute_force = reference.norm();
  r.tolerance = tol;
  r.abs_err = (closed - reference).cwiseAbs().maxCoeff();
  r.rel_err = r.abs_err / reference.cwiseAbs().maxCoeff();
  r.pass = r.rel_err <= tol;
  return r;
}

std::string label(const char* what, std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os << what << '(';
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << ' ';
    first = false;
    os << k << '=' << v;
  }
  os << ')';
  return os.str();
}

}  // namespace

std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  std::vector<GridPoint> pts;
  if (cfg.grid_mode == "zip") {
    const std::size_t len = cfg.grid_n.size();
    if (cfg.grid_p.size() != len || cfg.grid_q.size() != len) return pts;
    for (std::size_t i = 0; i < len; ++i) pts.push_back({cfg.grid_n[i], cfg.grid_p[i], cfg.grid_q[i]});
    return pts;
  }
  for (int n : cfg.grid_n)
    for (int p : cfg.grid_p)
      for (int q : cfg.grid_q) pts.push_back({n, p, q});
  return pts;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> errs;
  auto fail = [&errs](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    errs.push_back(os.str());
  };
  const std::string& c = cfg.command;
  if (c != "bound" && c != "verify" && c != "power" && c != "phase" && c != "divergence") {
    fail("command must be one of bound, verify, power, phase, divergence (got '", c, "')");
    return errs;
  }
  if (c == "verify") {
    if (cfg.mc_trials < 100) fail("mc-trials must be >= 100 (got ", cfg.mc_trials, ")");
    return errs;
  }

  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("alpha must lie in (0,1) (got ", cfg.alpha, ")");
  if (!(cfg.beta > cfg.alpha && cfg.beta < 1.0)) fail("beta must lie in (alpha,1) (got ", cfg.beta, ")");
  if (!(cfg.kappa > 0.0)) fail("kappa must be > 0 (got ", cfg.kappa, ")");
  if (cfg.b && !(std::isfinite(*cfg.b) && *cfg.b >= 0.0)) fail("b must be finite and >= 0 (got ", *cfg.b, ")");
  if (cfg.grid_mode != "product" && cfg.grid_mode != "zip")
    fail("grid-mode must be product or zip (got '", cfg.grid_mode, "')");

  if (cfg.grid_n.empty()) fail("grid-n must list at least one n");
  if (cfg.grid_p.empty()) fail("grid-p must list at least one p");
  if (cfg.grid_q.empty()) fail("grid-q must list at least one q");
  for (int n : cfg.grid_n) if (n < 1) fail("grid-n entries must be >= 1 (got ", n, ")");
  for (int p : cfg.grid_p) if (p < 1) fail("grid-p entries must be >= 1 (got ", p, ")");
  for (int q : cfg.grid_q) if (q < 1) fail("grid-q entries must be >= 1 (got ", q, ")");
  if (cfg.grid_mode == "zip" &&
      (cfg.grid_p.size() != cfg.grid_n.size() || cfg.grid_q.size() != cfg.grid_n.size()))
    fail("grid-mode zip needs grid-n, grid-p, grid-q of equal length");

  const bool stochastic = c == "power" || c == "phase";
  if (stochastic) {
    if (cfg.trials < 100) fail("trials must be >= 100 (got ", cfg.trials, ")");
    if (cfg.permutations < 19) fail("perms must be >= 19 (got ", cfg.permutations, ")");
  }
  if (c == "divergence" && grid_points(cfg).size() != 1)
    fail("divergence needs exactly one (n,p,q) point");
  if (c == "power" && cfg.regime != "null" && cfg.regime != "least_favorable" && cfg.regime != "both")
    fail("regime must be null, least_favorable or both (got '", cfg.regime, "')");
  if (c == "phase") {
    if (cfg.grid_s.empty()) fail("grid-s must list at least one s");
    for (double s : cfg.grid_s)
      if (!(std::isfinite(s) && s >= 0.0)) fail("grid-s entries must be finite and >= 0 (got ", s, ")");
    if (cfg.family != "least_favorable" && cfg.family != "paired")
      fail("family must be least_favorable or paired (got '", cfg.family, "')");
  }
  if (!errs.empty()) return errs;

  // Per-point preconditions.
  const bool signal_runs = c == "divergence" || (c == "power" && cfg.regime != "null");
  for (const GridPoint& g : grid_points(cfg)) {
    const double aspect = static_cast<double>(g.p + g.q) / g.n;
    if ((c == "bound" || signal_runs) && derives_b(cfg) && aspect > cfg.kappa)
      fail("(p+q)/n = ", aspect, " exceeds kappa = ", cfg.kappa, " at (n,p,q)=(", g.n, ",", g.p,
           ",", g.q, ") while b is derived from kappa");
    if (signal_runs) {
      const double a = amplitude(g.n, g.p, g.q, effective_b(cfg));
      if (a * a * g.p * static_cast<double>(g.q) >= 1.0)
        fail("b = ", effective_b(cfg), " makes a^2 pq >= 1 at (n,p,q)=(", g.n, ",", g.p, ",", g.q, ")");
    }
    if (c == "phase") {
      const double limit = max_signal(parse_family(cfg.family), g.n, g.p, g.q);
      for (double s : cfg.grid_s)
        if (s >= limit)
          fail("s = ", s, " is not positive definite for family ", cfg.family, " at (n,p,q)=(", g.n,
               ",", g.p, ",", g.q, "); need s < ", limit);
    }
  }
  return errs;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "command=" << cfg.command << ";seed=" << cfg.seed;
  if (cfg.command == "verify") {
    os << ";mc_trials=" << cfg.mc_trials << ";perturb=" << flag(cfg.perturb);
    return os.str();
  }
  os << ";alpha=" << num(cfg.alpha) << ";beta=" << num(cfg.beta) << ";kappa=" << num(cfg.kappa)
     << ";b=" << (cfg.b ? num(*cfg.b) : std::string("select_b")) << ";grid_n=" << join(cfg.grid_n)
     << ";grid_p=" << join(cfg.grid_p) << ";grid_q=" << join(cfg.grid_q)
     << ";grid_mode=" << cfg.grid_mode;
  if (cfg.command == "power" || cfg.command == "phase")
    os << ";trials=" << cfg.trials << ";perms=" << cfg.permutations
       << ";centered=" << flag(cfg.centered);
  if (cfg.command == "power") os << ";regime=" << cfg.regime;
  if (cfg.command == "phase") os << ";grid_s=" << join(cfg.grid_s) << ";family=" << cfg.family;
  return os.str();
}

std::string fingerprint(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<OracleReport> run_oracle_suite(std::uint64_t seed, std::int64_t mc_trials,
                                           bool perturb, int workers) {
  std::vector<OracleReport> rows;
  Rng rng = make_stream(seed, 0);

  // Binomial-sum chi-square against full sign enumeration.
  for (int n : {1, 4}) {
    for (auto [p, q] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{3, 2}}) {
      const double b = 0.3;
      rows.push_back(compare(label("chi2_exact_vs_enumeration", {{"n", n}, {"p", p}, {"q", q}, {"b", b}}),
                             chi_square_exact(n, p, q, b), enumerate_chi_square(n, p, q, b), 1e-12));
    }
  }
  rows.push_back(compare(label("chi2_exact_vs_enumeration", {{"n", 3}, {"p", 2}, {"q", 2}, {"b", 0}}),
                         chi_square_exact(3, 2, 2, 0.0), enumerate_chi_square(3, 2, 2, 0.0), 1e-15));
  {
    const int n = 3;
    const double a2 = std::pow(amplitude(n, 1, 1, 0.4), 2);
    const double two_point = 0.5 * (std::pow(1.0 - a2, -n) + std::pow(1.0 + a2, -n)) - 1.0;
    rows.push_back(compare("chi2_two_point_formula(n=3 p=1 q=1 b=0.4)", two_point,
                           enumerate_chi_square(n, 1, 1, 0.4), 1e-12));
  }

  // Closed-form eigenvalues against a dense eigensolver.
  for (int trial = 0; trial < 6; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 4);
    const int q = 1 + static_cast<int>(rng() % 4);
    const Eigen::VectorXd u = random_signs(p, rng), v = random_signs(q, rng);
    const Eigen::VectorXd g = random_signs(p, rng), h = random_signs(q, rng);
    const double a = std::uniform_real_distribution<double>(0.0, 0.95)(rng) / std::sqrt(double(p) * q);
    GammaQuad quad = gamma_eigs(a, p, q, static_cast<int>(u.dot(g)), static_cast<int>(v.dot(h)));
    if (perturb && trial == 0) quad.gammas[0] *= 1.0 + 1e-3;
    std::array<double, 4> closed = quad.gammas;
    std::sort(closed.begin(), closed.end());
    const auto numeric = gamma_numeric(u, v, g, h, a);
    for (int k = 0; k < 4; ++k)
      rows.push_back(compare(label("gamma_eig", {{"case", trial}, {"k", k}, {"p", p}, {"q", q}, {"a", a}}),
                             closed[k], numeric[k], 1e-8, 1.0));
    rows.push_back(compare(label("gamma_mgf_product", {{"case", trial}}), quad.mgf_product(),
                           quad.mgf_product_target(), 1e-10));

    Eigen::VectorXd z(p + q);
    fill_standard_normal(z, rng);
    rows.push_back(compare(label("quad_form_identity", {{"case", trial}}),
                           quad_form_matrix(u, v, g, h, a, z), quad_form_direct(u, v, g, h, a, z),
                           1e-10, 1.0));
  }

  // Matrix identities against generic dense routines.
  for (int trial = 0; trial < 4; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 6);
    const int q = 1 + static_cast<int>(rng() % 6);
    const double a = std::uniform_real_distribution<double>(0.0, 0.95)(rng) / std::sqrt(double(p) * q);
    const LeastFavorableCov lf(random_signs(p, rng), random_signs(q, rng), a);
    const Eigen::MatrixXd sigma = dense_cov(lf);
    rows.push_back(compare_matrices(label("sherman_morrison_inverse", {{"case", trial}, {"p", p}, {"q", q}}),
                                    cov_inverse(lf), verify::dense_inverse(sigma), 1e-10));
    rows.push_back(compare(label("determinant", {{"case", trial}, {"p", p}, {"q", q}}), cov_det(lf),
                           verify::dense_determinant(sigma), 1e-10));
    Eigen::MatrixXd root = Eigen::MatrixXd::Identity(p + q, p + q);
    cov_sqrt_apply_rows(lf, root);
    rows.push_back(compare_matrices(label("rank_two_sqrt", {{"case", trial}, {"p", p}, {"q", q}}), root,
                                    verify::symmetric_sqrt(sigma), 1e-10));
  }

  // Hoeffding step and the (1-x)^{-1/x} <= 4 step.
  for (auto [p, q] : {std::pair{3, 4}, std::pair{6, 6}}) {
    for (double b : {0.3, 0.6}) {
      for (double mu : {1.5, std::numbers::e, 10.0}) {
        const double thr = hoeffding_threshold(p, q, b, mu);
        rows.push_back(compare_upper_bound(
            label("hoeffding_tail", {{"p", p}, {"q", q}, {"b", b}, {"mu", mu}}),
            hoeffding_tail_bound(p, q, b, mu), enumerate_uv_tail(p, q, thr)));
      }
    }
  }
  {
    double worst = 0.0;
    for (int i = 0; i <= 105000; ++i) {
      const double x = -10.0 + i * 1e-4;
      if (x == 0.0 || std::abs(x) < 1e-12) continue;
      worst = std::max(worst, log_bound_function(std::min(x, 0.5)));
    }
    rows.push_back(compare_upper_bound("log_bound_grid(x in [-10,0.5])", 4.0, worst));
  }

  // Bound chain at the selected constant.
  {
    const double b = select_b(1.0, 0.05, 0.35);
    const double closed = chi_square_closed_bound(b);
    rows.push_back(compare_upper_bound("closed_bound_vs_power_gap(kappa=1 alpha=0.05 beta=0.35)",
                                       4.0 * 0.3 * 0.3, closed));
    rows.push_back(compare_upper_bound("chi2_exact_vs_closed_bound(n=4 p=2 q=2)", closed,
                                       chi_square_exact(4, 2, 2, b)));
  }

  // Gaussian-integral derivation against Monte Carlo on the density ratio.
  int mc_case = 0;
  for (auto [n, p, q, b] : {std::tuple{2, 1, 1, 0.4}, std::tuple{2, 2, 2, 0.3}}) {
    const McEstimate mc = mc_chi_square(n, p, q, b, mc_trials, derive_seed(seed, 100 + mc_case++), workers);
    rows.push_back(compare_abs(label("chi2_exact_vs_monte_carlo", {{"n", n}, {"p", p}, {"q", q}, {"b", b}}),
                               chi_square_exact(n, p, q, b), mc.estimate, 4.0 * mc.std_error));
  }
  return rows;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (auto errs = validate(cfg); !errs.empty()) return report_invalid(errs, log);
  std::vector<OracleReport> rows;
  try {
    rows = run_oracle_suite(cfg.seed, cfg.mc_trials, cfg.perturb, cfg.workers);
  } catch (const std::exception& e) {
    log << "verify: " << e.what() << '\n';
    return kExitNumerical;
  }
  write_preamble(out, "name,closed_form,brute_force,abs_err,rel_err,pass", cfg);
  int failures = 0;
  for (const auto& r : rows) {
    out << '"' << r.name << "\"," << num(r.closed_form) << ',' << num(r.brute_force) << ','
        << num(r.abs_err) << ',' << num(r.rel_err) << ',' << flag(r.pass) << '\n';
    if (!r.pass) ++failures;
  }
  log << "verify: " << rows.size() - failures << "/" << rows.size() << " passed\n";
  return failures == 0 ? kExitOk : kExitOracle;
}

int cmd_bound(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (auto errs = validate(cfg); !errs.empty()) return report_invalid(errs, log);
  const double b = effective_b(cfg);
  write_preamble(out,
                 "n,p,q,b,alpha,chi2_exact,chi2_closed_bound,tv_upper,power_upper,pd_ok,mgf_ok,"
                 "b_caps_ok,error",
                 cfg);
  int status = kExitOk;
  for (const GridPoint& g : grid_points(cfg)) {
    out << g.n << ',' << g.p << ',' << g.q << ',' << num(b) << ',' << num(cfg.alpha) << ',';
    try {
      const DivergenceReport r = minimax_power_upper(g.n, g.p, g.q, b, cfg.alpha);
      out << num(r.chi2_exact) << ',' << num(r.chi2_closed_bound) << ',' << num(r.tv_upper) << ','
          << num(r.power_upper) << ',' << flag(r.validity.pd_ok) << ',' << flag(r.validity.mgf_ok)
          << ',' << flag(r.validity.b_caps_ok) << ",\n";
    } catch (const std::exception& e) {
      const ValidityFlags f = validity_flags(g.n, g.p, g.q, b);
      out << ",,,," << flag(f.pd_ok) << ',' << flag(f.mgf_ok) << ',' << flag(f.b_caps_ok) << ",\""
          << e.what() << "\"\n";
      log << "bound: row (" << g.n << "," << g.p << "," << g.q << "): " << e.what() << '\n';
      status = kExitNumerical;
    }
  }
  return status;
}

namespace {

void write_power_row(std::ostream& out, const std::string& regime, const GridPoint& g,
                     double signal, const PowerEstimate* pe, std::uint64_t seed) {
  out << regime << ',' << g.n << ',' << g.p << ',' << g.q << ',' << num(signal) << ',';
  if (pe)
    out << pe->trials << ',' << pe->rejections << ',' << num(pe->estimate) << ',' << num(pe->ci_low)
        << ',' << num(pe->ci_high);
  else
    out << ",,,,";
  out << ',' << seed << '\n';
}

constexpr const char* kPowerHeader =
    "regime,n,p,q,s_or_b,trials,rejections,estimate,ci_low,ci_high,seed";

}  // namespace

int cmd_power(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (auto errs = validate(cfg); !errs.empty()) return report_invalid(errs, log);
  write_preamble(out, kPowerHeader, cfg);
  const auto points = grid_points(cfg);
  std::vector<std::string> regimes;
  if (cfg.regime != "least_favorable") regimes.push_back("null");
  if (cfg.regime != "null") regimes.push_back("least_favorable");

  int status = kExitOk;
  std::uint64_t row = 0;
  const std::size_t total = points.size() * regimes.size();
  for (const GridPoint& g : points) {
    for (const auto& regime : regimes) {
      ++row;
      log << "[power] " << row << "/" << total << " " << regime << " (n,p,q)=(" << g.n << ","
          << g.p << "," << g.q << ")\n";
      RunOptions opts;
      opts.trials = cfg.trials;
      opts.permutations = cfg.permutations;
      opts.seed = derive_seed(cfg.seed, row - 1);
      opts.workers = cfg.workers;
      opts.centered = cfg.centered;
      ProblemConfig pc;
      pc.n = g.n;
      pc.p = g.p;
      pc.q = g.q;
      pc.alpha = cfg.alpha;
      pc.beta = cfg.beta;
      const double signal = regime == "null" ? 0.0 : effective_b(cfg);
      pc.b = signal;
      try {
        const PowerEstimate pe = regime == "null" ? estimate_level(pc, opts) : estimate_avg_power(pc, opts);
        write_power_row(out, regime, g, signal, &pe, cfg.seed);
      } catch (const std::exception& e) {
        log << "power: row " << row << ": " << e.what() << '\n';
        write_power_row(out, regime, g, signal, nullptr, cfg.seed);
        status = kExitNumerical;
      }
    }
  }
  return status;
}

int cmd_phase(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (auto errs = validate(cfg); !errs.empty()) return report_invalid(errs, log);
  write_preamble(out, kPowerHeader, cfg);
  const auto family = parse_family(cfg.family);
  const auto points = grid_points(cfg);
  int status = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GridPoint& g = points[i];
    log << "[phase] " << i + 1 << "/" << points.size() << " (n,p,q)=(" << g.n << "," << g.p << ","
        << g.q << ")\n";
    RunOptions opts;
    opts.trials = cfg.trials;
    opts.permutations = cfg.permutations;
    opts.seed = derive_seed(cfg.seed, i);
    opts.workers = cfg.workers;
    opts.centered = cfg.centered;
    try {
      for (const PhasePoint& pt : phase_curve(g.n, g.p, g.q, cfg.grid_s, cfg.alpha, opts, family))
        write_power_row(out, to_string(family), g, pt.s, &pt.power, cfg.seed);
    } catch (const std::exception& e) {
      log << "phase: point " << i + 1 << ": " << e.what() << '\n';
      for (double s : cfg.grid_s) write_power_row(out, to_string(family), g, s, nullptr, cfg.seed);
      status = kExitNumerical;
    }
  }
  return status;
}

int cmd_divergence(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (auto errs = validate(cfg); !errs.empty()) return report_invalid(errs, log);
  const GridPoint g = grid_points(cfg).front();
  const double b = effective_b(cfg);
  try {
    const DivergenceReport r = minimax_power_upper(g.n, g.p, g.q, b, cfg.alpha);
    out << "{\n"
        << "  \"n\": " << g.n << ",\n  \"p\": " << g.p << ",\n  \"q\": " << g.q << ",\n"
        << "  \"b\": " << num(b) << ",\n  \"alpha\": " << num(cfg.alpha) << ",\n"
        << "  \"amplitude\": " << num(amplitude(g.n, g.p, g.q, b)) << ",\n"
        << "  \"chi2_exact\": " << num(r.chi2_exact) << ",\n"
        << "  \"chi2_closed_bound\": "
        << (std::isfinite(r.chi2_closed_bound) ? num(r.chi2_closed_bound) : std::string("null"))
        << ",\n"
        << "  \"tv_upper\": " << num(r.tv_upper) << ",\n"
        << "  \"power_upper\": " << num(r.power_upper) << ",\n"
        << "  \"pd_ok\": " << flag(r.validity.pd_ok) << ",\n"
        << "  \"mgf_ok\": " << flag(r.validity.mgf_ok) << ",\n"
        << "  \"b_caps_ok\": " << flag(r.validity.b_caps_ok) << "\n}\n";
  } catch (const std::exception& e) {
    log << "divergence: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.command == "bound") return cmd_bound(cfg, out, log);
  if (cfg.command == "verify") return cmd_verify(cfg, out, log);
  if (cfg.command == "power") return cmd_power(cfg, out, log);
  if (cfg.command == "phase") return cmd_phase(cfg, out, log);
  if (cfg.command == "divergence") return cmd_divergence(cfg, out, log);
  return report_invalid(validate(cfg), log);
}

}  // namespace lintest
