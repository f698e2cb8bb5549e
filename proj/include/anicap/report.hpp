#pragma once

// JSON and CSV output. Everything that varies between identical runs (wall
// clock, thread count) goes under the "timestamp" key of the report.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anicap/functionals.hpp"
#include "anicap/identities.hpp"
#include "anicap/norms.hpp"
#include "anicap/solver.hpp"

namespace anicap {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchema = 1;

/// Writes `content` to a sibling temporary and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + tmp.string());
    out << content;
    out.flush();
    require(static_cast<bool>(out), "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// CSV with a header row; numbers with 17 significant digits.
inline std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << "\n" << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    os << "\n";
  }
  return os.str();
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json to_json(const NormValidationReport& r) {
  return {{"euler_residual", r.euler_residual},
          {"hessian_null_residual", r.hessian_null_residual},
          {"unit_residual", r.unit_residual},
          {"inversion_residual", r.inversion_residual},
          {"min_ellipticity", r.min_ellipticity},
          {"samples", r.samples},
          {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

/// Solver summary without timings.
inline json to_json(const SolveReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"delta", s.delta}, {"energy", s.energy}, {"iterations", s.iterations}});
  return {{"method", r.method},
          {"energy", r.energy},
          {"residual", r.residual},
          {"robin_residual", r.robin_residual},
          {"iterations", r.iterations},
          {"linear_iterations", r.linear_iterations},
          {"factorizations", r.factorizations},
          {"converged", r.converged},
          {"max_principle", r.max_principle},
          {"monotone_rays", r.monotone_rays},
          {"min_u", r.min_u},
          {"max_u", r.max_u},
          {"r_out", r.r_out},
          {"stages", stages},
          {"message", r.message}};
}

inline json to_json(const CapacityResult& c) {
  return {{"cap_energy", c.cap_energy}, {"cap_flux", c.cap_flux}, {"discrepancy", c.discrepancy},
          {"gamma", c.gamma},           {"p", c.p},               {"norm", c.norm},
          {"domain", c.domain},         {"tail_method", c.tail_method}};
}

inline json to_json(const PhiCurve& c) {
  return {{"p", c.params.p},
          {"q", c.params.q},
          {"method", to_string(c.method)},
          {"tau", c.tau},
          {"phi", c.phi},
          {"limit", c.limit},
          {"max_violation", c.max_violation},
          {"phi_one", c.phi_one},
          {"slope_at_one", c.slope_at_one},
          {"step", c.step}};
}

inline json to_json(const InequalityReport& r) {
  json recs = json::array();
  for (const auto& x : r.records)
    recs.push_back({{"name", x.name},
                    {"lhs", x.lhs},
                    {"rhs", x.rhs},
                    {"ratio", x.ratio},
                    {"verdict", x.verdict},
                    {"tolerance", x.tolerance},
                    {"note", x.note}});
  return {{"records", recs}, {"convex", r.convex}, {"consistency", r.consistency}, {"all_pass", r.all_pass()}};
}

inline json to_json(const SweepTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"p", r.p},
                    {"cap", r.cap},
                    {"cap_energy", r.cap_energy},
                    {"target", r.target},
                    {"ratio", r.ratio},
                    {"closed_form", r.closed_form},
                    {"converged", r.converged}});
  return {{"rows", rows}, {"convex", t.convex}, {"monotone", t.monotone}, {"verdict", t.verdict}};
}

inline json to_json(const KatoResidual& k) {
  return {{"kato", k.kato},         {"eq2.21", k.eq221},
          {"eq2.22", k.eq222},      {"orthogonal", k.orthogonal},
          {"mean_curvature", k.mean_curvature}, {"pinch", k.pinch}};
}

inline json to_json(const DivReport& d) {
  return {{"max_eq2.10", d.max_eq210}, {"max_eq2.11", d.max_eq211}, {"max_div_x", d.max_div_x},
          {"max_div_y", d.max_div_y},  {"richardson_ok", d.richardson_ok}, {"probes", d.probes.size()}};
}

inline json to_json(const SignReport& s) {
  return {{"samples", s.samples},
          {"theta_violations", s.theta_violations},
          {"div_x_violations", s.div_x_violations},
          {"div_y_violations", s.div_y_violations},
          {"max_theta", s.max_theta},
          {"max_div_y", s.max_div_y},
          {"theta_consistency", s.theta_consistency},
          {"tangential_coefficient", s.min_tangential_coefficient},
          {"gap_coefficient", s.min_gap_coefficient}};
}

}  // namespace anicap
