#pragma once

// Command-line runner. Exit codes: 0 all verdicts pass, 1 usage or
// configuration error, 2 at least one verdict failed.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "anicap/config.hpp"
#include "anicap/functionals.hpp"
#include "anicap/identities.hpp"
#include "anicap/report.hpp"
#include "anicap/solver.hpp"
#include "anicap/wulff.hpp"

namespace anicap {

enum ExitCode { kExitPass = 0, kExitUsage = 1, kExitVerdict = 2 };

inline const std::vector<std::string>& cli_commands() {
  static const std::vector<std::string> c{"validate-norm", "wulff-info", "capacity", "phi",
                                          "verify",        "sweep-p",    "identities", "all"};
  return c;
}

namespace detail {

inline std::string p_tag(double p, const char* prefix = "p") {
  std::ostringstream os;
  os << prefix << p;
  return os.str();
}

template <int N>
std::vector<Vec<N>> probe_directions() {
  if constexpr (N == 3) {
    return {Vec<3>(0.9, 0.2, 0.35).normalized(), Vec<3>(0.3, 0.8, -0.52).normalized(),
            Vec<3>(-0.5, 0.5, 0.7071).normalized()};
  } else {
    return {Vec<2>(std::cos(0.4), std::sin(0.4)), Vec<2>(std::cos(1.3), std::sin(1.3)),
            Vec<2>(std::cos(2.2), std::sin(2.2))};
  }
}

template <int N>
class Runner {
 public:
  Runner(const RunConfig& cfg, std::ostream& out)
      : cfg_(cfg),
        out_(out),
        norm_(std::make_shared<const NormEvaluator<N>>(cfg.norm)),
        domain_(cfg.domain, norm_) {}

  json results = json::object();
  json seconds = json::object();
  bool pass = true;
  std::filesystem::path dir;

  void run(const std::string& stage) {
    const auto t0 = std::chrono::steady_clock::now();
    if (stage == "norm") validate_norm_stage();
    else if (stage == "wulff") wulff_stage();
    else if (stage == "capacity") capacity_stage();
    else if (stage == "phi") phi_stage();
    else if (stage == "verify") verify_stage();
    else if (stage == "sweep") sweep_stage();
    else if (stage == "identities") identities_stage();
    seconds[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

 private:
  void verdict(const std::string& what, bool ok, const std::string& detail_text) {
    pass = pass && ok;
    out_ << what << ": " << detail_text << " [" << (ok ? "pass" : "FAIL") << "]\n";
  }

  const PotentialField<N>& field(double p) {
    auto it = fields_.find(p);
    if (it == fields_.end()) {
      SolverConfig sc = cfg_.solver;
      sc.threads = cfg_.threads;
      it = fields_.emplace(p, solve_potential(domain_, *norm_, p, sc)).first;
      seconds["solve_" + p_tag(p)] = it->second.report.seconds;
    }
    return it->second;
  }

  // Analytic Cap for Wulff balls of the configured norm (and Euclidean balls).
  std::optional<double> analytic_capacity(double p) const {
    const auto& d = cfg_.domain;
    const bool wulff = d.kind == DomainKind::WulffRadial ||
                       (d.kind == DomainKind::Ball && cfg_.norm.family == NormFamily::Euclidean);
    if (!wulff) return std::nullopt;
    return wulff_capacity(N, kappa(*norm_, cfg_.boundary), p, d.radius);
  }

  void validate_norm_stage() {
    const auto r = validate_norm(*norm_, cfg_.norm_samples, cfg_.seed);
    results["norm"] = to_json(r);
    results["norm"]["spec"] = cfg_.norm.describe();
    std::ostringstream os;
    os << cfg_.norm.describe() << " max residual "
       << std::max({r.euler_residual, r.hessian_null_residual, r.unit_residual, r.inversion_residual})
       << ", min ellipticity " << r.min_ellipticity;
    verdict("validate-norm", r.pass, os.str());
  }

  void wulff_stage() {
    const WulffData w = wulff_data(*norm_, cfg_.boundary);
    json j = {{"volume", w.volume}, {"kappa", w.kappa}, {"norm", cfg_.norm.describe()}};
    json caps = json::array();
    for (double p : cfg_.p) caps.push_back({{"p", p}, {"cap_wulff", wulff_capacity(N, w.kappa, p, cfg_.domain.radius)}});
    j["wulff_capacity"] = caps;
    j["radius"] = cfg_.domain.radius;
    results["wulff"] = j;
    std::ostringstream os;
    os << "|W| = " << w.volume << ", kappa = " << w.kappa;
    verdict("wulff-info", w.volume > 0.0 && std::isfinite(w.volume), os.str());
  }

  void capacity_stage() {
    json arr = json::array();
    for (double p : cfg_.p) {
      const auto& f = field(p);
      json j = {{"p", p}, {"solve", to_json(f.report)}};
      bool ok = f.usable();
      std::ostringstream os;
      os << "p = " << p;
      if (ok) {
        const CapacityResult c = capacity(f, domain_, *norm_);
        j["capacity"] = to_json(c);
        ok = c.discrepancy < cfg_.tolerance;
        os << " cap_flux " << c.cap_flux << " cap_energy " << c.cap_energy << " discrepancy " << c.discrepancy;
        if (const auto t = analytic_capacity(p)) {
          const double ratio = c.cap_flux / *t;
          j["target"] = *t;
          j["ratio"] = ratio;
          ok = ok && std::abs(ratio - 1.0) < cfg_.tolerance;
          os << " target " << *t << " ratio " << ratio;
        }
      } else {
        os << " solve not usable: " << f.report.message;
      }
      j["pass"] = ok;
      arr.push_back(j);
      verdict("capacity", ok, os.str());
    }
    results["capacity"] = arr;
  }

  void phi_stage() {
    json arr = json::array();
    for (const PhiParams& c : cfg_.exponent_pairs()) {
      const auto& f = field(c.p);
      json j = {{"p", c.p}, {"q", c.q}};
      std::ostringstream os;
      os << "p = " << c.p << " q = " << c.q;
      bool ok = f.usable();
      if (ok) {
        const double cap = capacity_flux(f, domain_, *norm_);
        const double tmax = cfg_.phi.tau_max > 0.0 ? cfg_.phi.tau_max : max_tau(f, cfg_.phi.s_cap);
        const PhiCurve curve = phi_curve(f, *norm_, c, tau_grid(tmax, cfg_.phi.samples), cap, cfg_.phi.method);
        const double budget = 1e-3 * curve.phi_one;
        const double diff_one = curve.slope_at_one * curve.step;
        const double limit_gap = std::abs(curve.phi.back() / curve.limit - 1.0);
        ok = curve.max_violation <= budget && diff_one <= budget && limit_gap <= 0.03;
        j["curve"] = to_json(curve);
        j["difference_at_one"] = diff_one;
        j["limit_gap"] = limit_gap;
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < curve.tau.size(); ++k) rows.push_back({curve.tau[k], curve.phi[k]});
        const std::string name = "phi_" + p_tag(c.p) + "_" + p_tag(c.q, "q") + ".csv";
        write_atomic(dir / name, csv_table({"tau", "phi"}, rows));
        j["csv"] = name;
        os << " Phi(1) " << curve.phi_one << " max violation " << curve.max_violation << " Phi(1.05)-Phi(1) "
           << diff_one << " Phi(tau_max)/limit-1 " << limit_gap;
      } else {
        os << " solve not usable: " << f.report.message;
      }
      j["pass"] = ok;
      arr.push_back(j);
      verdict("phi", ok, os.str());
    }
    results["phi"] = arr;
  }

  void verify_stage() {
    if constexpr (N != 3) {
      throw ConfigError("verify needs dimension 3");
    } else {
      json arr = json::array();
      for (const PhiParams& c : cfg_.exponent_pairs()) {
        const auto& f = field(c.p);
        json j = {{"p", c.p}, {"q", c.q}};
        std::ostringstream os;
        os << "p = " << c.p << " q = " << c.q;
        bool ok = f.usable();
        if (ok) {
          const double cap = capacity_flux(f, domain_, *norm_);
          const InequalityReport rep = verify_inequalities(domain_, *norm_, c, cap, cfg_.boundary, cfg_.tolerance);
          ok = rep.all_pass();
          j["inequalities"] = to_json(rep);
          j["cap_flux"] = cap;
          for (const auto& r : rep.records) {
            os << " " << r.name << "=";
            if (r.verdict == "skipped") os << "skipped";
            else os << std::setprecision(5) << r.ratio;
          }
        } else {
          os << " solve not usable: " << f.report.message;
        }
        j["pass"] = ok;
        arr.push_back(j);
        verdict("verify", ok, os.str());
      }
      results["verify"] = arr;
    }
  }

  void sweep_stage() {
    SolverConfig sc = cfg_.solver;
    sc.threads = cfg_.threads;
    const SweepTable t = capacity_p_sweep(domain_, *norm_, cfg_.sweep_p, sc, cfg_.boundary);
    json j = to_json(t);
    std::vector<std::vector<double>> rows;
    bool ok = t.verdict != "fail";
    std::ostringstream os;
    for (const auto& r : t.rows) {
      rows.push_back({r.p, r.cap, r.target, r.ratio});
      ok = ok && r.converged;
      os << " p=" << r.p << " ratio=" << r.ratio;
      if (r.closed_form > 0.0) os << " (closed form " << r.closed_form << ")";
      seconds["sweep_" + p_tag(r.p)] = r.seconds;
    }
    write_atomic(dir / "sweep.csv", csv_table({"p", "cap", "target", "ratio"}, rows));
    j["csv"] = "sweep.csv";
    j["pass"] = ok;
    results["sweep"] = j;
    verdict("sweep-p", ok, "verdict " + t.verdict + os.str());
  }

  void identities_stage() {
    json arr = json::array();
    std::uint64_t seed = cfg_.seed;
    for (const PhiParams& c : cfg_.exponent_pairs()) {
      std::mt19937_64 rng(seed++);
      std::normal_distribution<double> gauss;
      KatoResidual worst;
      for (int k = 0; k < cfg_.identities.kato_states; ++k) {
        Vec<N> xi;
        for (int i = 0; i < N; ++i) xi(i) = gauss(rng);
        const KatoResidual r = check_kato(sample_constrained_hessian(*norm_, c.p, xi, rng()));
        worst.kato = std::max(worst.kato, r.kato);
        worst.eq221 = std::max(worst.eq221, r.eq221);
        worst.eq222 = std::max(worst.eq222, r.eq222);
        worst.orthogonal = std::max(worst.orthogonal, r.orthogonal);
        worst.mean_curvature = std::max(worst.mean_curvature, r.mean_curvature);
        worst.pinch = std::max(worst.pinch, r.pinch);
      }
      const double radius = cfg_.domain.radius;
      std::vector<Vec<N>> probes;
      for (double r : cfg_.identities.probe_radii)
        for (const Vec<N>& d : probe_directions<N>()) probes.push_back(d * (r * radius / norm_->dual_value(d)));
      const DivReport div = check_div_identities<N>(*norm_, c.p, c.q, cfg_.identities.lambda,
                                                    wulff_potential_field(*norm_, c.p, radius), probes);
      double max_div_x = 0.0;
      for (const auto& pr : div.probes) max_div_x = std::max(max_div_x, std::abs(pr.div_x_fd));
      const SignReport sign =
          check_sign_fields(*norm_, c.p, c.q, cfg_.identities.lambda, cfg_.identities.sign_states, seed++);
      const bool ok = worst.max() < 1e-8 && div.max_eq210 < 1e-6 && div.max_eq211 < 1e-6 && div.max_div_x < 1e-6 &&
                      div.richardson_ok && sign.theta_violations == 0 && sign.div_x_violations == 0 &&
                      sign.div_y_violations == 0;
      arr.push_back({{"p", c.p},
                     {"q", c.q},
                     {"kato_states", cfg_.identities.kato_states},
                     {"kato", to_json(worst)},
                     {"divergence", to_json(div)},
                     {"wulff_max_abs_div_x", max_div_x},
                     {"sign", to_json(sign)},
                     {"pass", ok}});
      std::ostringstream os;
      os << "p = " << c.p << " q = " << c.q << " max Kato residual " << worst.max() << ", eq2.10 " << div.max_eq210
         << ", eq2.11 " << div.max_eq211 << ", |div X| " << max_div_x << ", sign violations "
         << sign.theta_violations + sign.div_y_violations << "/" << sign.samples;
      verdict("identities", ok, os.str());
    }
    results["identities"] = arr;
  }

  const RunConfig& cfg_;
  std::ostream& out_;
  std::shared_ptr<const NormEvaluator<N>> norm_;
  StarDomain<N> domain_;
  std::map<double, PotentialField<N>> fields_;
};

inline std::vector<std::string> stages_for(const std::string& command, const RunConfig& cfg) {
  if (command == "validate-norm") return {"norm"};
  if (command == "wulff-info") return {"wulff"};
  if (command == "capacity") return {"capacity"};
  if (command == "phi") return {"phi"};
  if (command == "verify") return {"verify"};
  if (command == "sweep-p") return {"sweep"};
  if (command == "identities") return {"identities"};
  return cfg.checks;
}

template <int N>
int execute(const std::string& command, const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out,
            json& report) {
  Runner<N> runner(cfg, out);
  runner.dir = dir;
  for (const auto& stage : stages_for(command, cfg)) runner.run(stage);
  report["results"] = runner.results;
  report["verdict"] = runner.pass ? "pass" : "fail";
  report["timestamp"]["seconds"] = runner.seconds;
  return runner.pass ? kExitPass : kExitVerdict;
}

}  // namespace detail

/// Parses argv, runs the subcommand and writes <out>/report.json.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Anisotropic capacity experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
  app.add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides [run] output)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", deterministic, "thread-count independent reductions");
  for (const auto& c : cli_commands()) app.add_subcommand(c, "run " + c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (!out_dir.empty()) cfg.output = out_dir;
    cfg.deterministic = cfg.deterministic || deterministic;
    cfg.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  json report;
  report["schema_version"] = kReportSchema;
  report["tool"] = {{"name", "anicap"}, {"version", kToolVersion}};
  report["command"] = command;
  json q = json::array();
  for (const auto& c : cfg.exponent_pairs()) q.push_back(c.q);
  report["config"] = {{"file", cfg.echo},
                      {"norm", cfg.norm.describe()},
                      {"domain", cfg.domain.describe()},
                      {"p", cfg.p},
                      {"q", q},
                      {"seed", cfg.seed},
                      {"deterministic", cfg.deterministic}};
  report["timestamp"] = {{"utc", utc_now()}, {"threads", cfg.threads}};

  const std::filesystem::path dir(cfg.output);
  int code = kExitPass;
  try {
    std::filesystem::create_directories(dir);
    code = cfg.dimension() == 3 ? detail::execute<3>(command, cfg, dir, out, report)
                                : detail::execute<2>(command, cfg, dir, out, report);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  write_atomic(dir / "report.json", report.dump(2) + "\n");
  out << "report: " << (dir / "report.json").string() << " (" << report["verdict"].get<std::string>() << ")\n";
  return code;
}

}  // namespace anicap
