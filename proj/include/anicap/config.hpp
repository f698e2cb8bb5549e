#pragma once

// Run configuration: an INI-style file of [section] blocks with key = value
// lines. Comments start with '#' or ';'. Unknown sections or keys, duplicate
// keys and malformed values are errors reported as "file:line: message".

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anicap/domains.hpp"
#include "anicap/functionals.hpp"
#include "anicap/norms.hpp"
#include "anicap/solver.hpp"

namespace anicap {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IniEntry {
  std::string value;
  int line = 0;
};

/// Parsed file: section -> key -> entry, plus the source name for messages.
class IniFile {
 public:
  static IniFile parse(std::istream& in, const std::string& source) {
    IniFile f;
    f.source_ = source;
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string text = trim(strip_comment(raw));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') throw f.error(line, "malformed section header '" + text + "'");
        section = trim(text.substr(1, text.size() - 2));
        if (section.empty()) throw f.error(line, "empty section name");
        if (f.section_lines_.count(section)) throw f.error(line, "duplicate section [" + section + "]");
        f.section_lines_[section] = line;
        f.data_[section];
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw f.error(line, "expected 'key = value'");
      if (section.empty()) throw f.error(line, "key outside of any section");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) throw f.error(line, "empty key");
      auto& sec = f.data_[section];
      if (sec.count(key)) throw f.error(line, "duplicate key '" + key + "' in [" + section + "]");
      sec[key] = {value, line};
    }
    return f;
  }

  static IniFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open configuration file");
    return parse(in, path);
  }

  const std::string& source() const { return source_; }
  bool has_section(const std::string& s) const { return data_.count(s) > 0; }
  const IniEntry* find(const std::string& s, const std::string& k) const {
    const auto it = data_.find(s);
    if (it == data_.end()) return nullptr;
    const auto jt = it->second.find(k);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  /// Rejects sections and keys not present in `schema`.
  void check_schema(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [sec, keys] : data_) {
      const auto it = schema.find(sec);
      if (it == schema.end()) throw error(section_lines_.at(sec), "unknown section [" + sec + "]");
      for (const auto& [key, entry] : keys)
        if (!it->second.count(key)) throw error(entry.line, "unknown key '" + key + "' in [" + sec + "]");
    }
  }

  ConfigError error(int line, const std::string& msg) const {
    return ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  /// Section -> key -> value, for echoing into reports.
  std::map<std::string, std::map<std::string, std::string>> values() const {
    std::map<std::string, std::map<std::string, std::string>> out;
    for (const auto& [sec, keys] : data_)
      for (const auto& [key, entry] : keys) out[sec][key] = entry.value;
    return out;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string source_;
  std::map<std::string, std::map<std::string, IniEntry>> data_;
  std::map<std::string, int> section_lines_;
};

/// Typed reads from an IniFile with location-precise errors.
class IniReader {
 public:
  explicit IniReader(const IniFile& f) : f_(f) {}

  template <class T>
  void get(const std::string& sec, const std::string& key, T& out) const {
    const IniEntry* e = f_.find(sec, key);
    if (!e) return;
    out = convert<T>(*e, key);
  }

  template <class T>
  void get_list(const std::string& sec, const std::string& key, std::vector<T>& out) const {
    const IniEntry* e = f_.find(sec, key);
    if (!e) return;
    out.clear();
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(convert<T>({item, e->line}, key));
    if (out.empty()) throw f_.error(e->line, "'" + key + "' needs at least one value");
  }

  /// Rows separated by ';' inside the value are not possible (';' starts a
  /// comment), so matrices use '|' between rows: "2 0 0 | 0 1 0 | 0 0 1".
  std::vector<std::vector<double>> get_rows(const std::string& sec, const std::string& key) const {
    const IniEntry* e = f_.find(sec, key);
    std::vector<std::vector<double>> rows;
    if (!e) return rows;
    std::stringstream ss(e->value);
    std::string row;
    while (std::getline(ss, row, '|')) {
      std::stringstream rs(row);
      std::vector<double> r;
      std::string tok;
      while (rs >> tok) r.push_back(convert<double>({tok, e->line}, key));
      if (r.empty()) throw f_.error(e->line, "empty row in '" + key + "'");
      rows.push_back(r);
    }
    return rows;
  }

  std::vector<double> get_numbers(const std::string& sec, const std::string& key) const {
    const auto rows = get_rows(sec, key);
    if (rows.empty()) return {};
    if (rows.size() != 1) throw f_.error(line(sec, key), "'" + key + "' expects a single row");
    return rows.front();
  }

  int line(const std::string& sec, const std::string& key) const {
    const IniEntry* e = f_.find(sec, key);
    return e ? e->line : 0;
  }
  ConfigError error(const std::string& sec, const std::string& key, const std::string& msg) const {
    return f_.error(line(sec, key), msg);
  }

 private:
  template <class T>
  T convert(const IniEntry& e, const std::string& key) const {
    std::string v = e.value;
    const auto b = v.find_first_not_of(" \t");
    const auto end = v.find_last_not_of(" \t");
    v = b == std::string::npos ? "" : v.substr(b, end - b + 1);
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      throw f_.error(e.line, "'" + key + "' expects true or false, got '" + v + "'");
    } else {
      std::istringstream is(v);
      T out{};
      if (!(is >> out) || !(is >> std::ws).eof())
        throw f_.error(e.line, "'" + key + "' expects a number, got '" + v + "'");
      return out;
    }
  }

  const IniFile& f_;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct PhiOptions {
  int samples = 20;
  double tau_max = 0.0;  // 0: max_tau(field, s_cap)
  double s_cap = 0.85;
  PhiMethod method = PhiMethod::Rays;
};

struct IdentityOptions {
  int kato_states = 1000;
  int sign_states = 10000;
  double lambda = 0.5;
  std::vector<double> probe_radii{1.5, 2.0, 3.0};
};

struct RunConfig {
  NormSpec norm = NormSpec::euclidean(3);
  DomainSpec domain = DomainSpec::wulff(1.0);
  std::vector<double> p{2.0};
  std::vector<double> q;  // empty: default per p
  SolverConfig solver;
  PhiOptions phi;
  IdentityOptions identities;
  std::vector<double> sweep_p{1.5, 1.2, 1.05};
  SphereResolution boundary{48, 96};
  double tolerance = 0.02;
  int norm_samples = 1000;
  std::string output = "anicap-out";
  std::uint64_t seed = 1;
  int threads = 1;
  bool deterministic = false;
  std::vector<std::string> checks{"norm", "wulff", "capacity", "phi", "verify", "identities"};
  std::map<std::string, std::map<std::string, std::string>> echo;

  int dimension() const { return norm.dimension; }

  /// (p, q) pairs; q defaults to max(2, 1 + 1/p*).
  std::vector<PhiParams> exponent_pairs() const {
    std::vector<PhiParams> out;
    for (std::size_t k = 0; k < p.size(); ++k) {
      PhiParams c = PhiParams::with_default_q(dimension(), p[k]);
      if (!q.empty()) c.q = q[k];
      out.push_back(c);
    }
    return out;
  }

  void validate() const {
    const int n = dimension();
    require(n == 2 || n == 3, "dimension must be 2 or 3");
    require(!p.empty(), "at least one exponent p is required");
    for (double v : p) require(v > 1.0 && v < n, "p = " + std::to_string(v) + " violates 1 < p < n");
    require(q.empty() || q.size() == p.size(), "q list must match the p list in length");
    for (const auto& c : exponent_pairs()) c.validate();
    for (double v : sweep_p) require(v > 1.0 && v < n, "sweep p = " + std::to_string(v) + " violates 1 < p < n");
    require(threads >= 1, "threads must be at least 1");
    require(phi.samples >= 2, "phi samples must be at least 2");
    require(identities.lambda > 0.0 && identities.lambda < 1.0, "lambda must lie in (0, 1)");
    require(tolerance > 0.0, "tolerance must be positive");
    solver.validate();
  }
};

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"norm", {"family", "dimension", "matrix", "exponent", "directions", "smoothing", "blend", "samples"}},
      {"domain", {"kind", "radius", "semi_axes", "amplitude", "mode"}},
      {"run", {"p", "q", "seed", "output", "threads", "deterministic", "checks", "tolerance"}},
      {"solver",
       {"radial", "polar", "azimuth", "r_out", "r_out_factor", "delta0", "delta_factor", "delta_final",
        "gradient_tolerance", "energy_tolerance", "max_iterations", "method"}},
      {"phi", {"samples", "tau_max", "s_cap", "method"}},
      {"sweep", {"p"}},
      {"boundary", {"polar", "azimuth"}},
      {"identities", {"kato_states", "sign_states", "lambda", "probe_radii"}},
  };
  return s;
}

inline RunConfig read_config(const IniFile& f) {
  f.check_schema(config_schema());
  const IniReader r(f);
  RunConfig c;
  c.echo = f.values();

  int n = 3;
  r.get("norm", "dimension", n);
  if (n != 2 && n != 3) throw r.error("norm", "dimension", "dimension must be 2 or 3");
  std::string family = "euclidean";
  r.get("norm", "family", family);
  if (family == "euclidean") {
    c.norm = NormSpec::euclidean(n);
  } else if (family == "ellipsoid") {
    const auto rows = r.get_rows("norm", "matrix");
    if (rows.empty()) throw f.error(r.line("norm", "family"), "ellipsoid norm needs 'matrix'");
    Eigen::MatrixXd a(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw r.error("norm", "matrix", "matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) a(i, j) = rows[i][j];
    }
    if (a.rows() != n) throw r.error("norm", "matrix", "matrix size must equal the dimension");
    c.norm = NormSpec::ellipsoid(a);
  } else if (family == "power") {
    double q = 4.0;
    r.get("norm", "exponent", q);
    c.norm = NormSpec::power(n, q);
  } else if (family == "cube" || family == "polytope") {
    int smoothing = 4;
    double blend = 0.05;
    r.get("norm", "smoothing", smoothing);
    r.get("norm", "blend", blend);
    if (family == "cube") {
      c.norm = NormSpec::cube(n, smoothing, blend);
    } else {
      std::vector<Eigen::VectorXd> dirs;
      for (const auto& row : r.get_rows("norm", "directions")) {
        if (static_cast<int>(row.size()) != n) throw r.error("norm", "directions", "direction length must equal the dimension");
        dirs.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), n));
      }
      if (dirs.empty()) throw f.error(r.line("norm", "family"), "polytope norm needs 'directions'");
      c.norm = NormSpec::smoothed_polytope(dirs, smoothing, blend);
    }
  } else {
    throw r.error("norm", "family", "unknown norm family '" + family + "' (euclidean, ellipsoid, power, cube, polytope)");
  }
  r.get("norm", "samples", c.norm_samples);

  std::string kind = "wulff";
  double radius = 1.0;
  r.get("domain", "kind", kind);
  r.get("domain", "radius", radius);
  if (kind == "ball") {
    c.domain = DomainSpec::ball(radius);
  } else if (kind == "wulff") {
    c.domain = DomainSpec::wulff(radius);
  } else if (kind == "ellipsoid") {
    const auto axes = r.get_numbers("domain", "semi_axes");
    if (static_cast<int>(axes.size()) != n)
      throw f.error(r.line("domain", "kind"), "ellipsoid domain needs " + std::to_string(n) + " semi_axes");
    c.domain = DomainSpec::ellipsoid(axes);
  } else if (kind == "perturbed_wulff") {
    double amp = 0.1;
    std::string mode = n == 3 ? "l2m0" : "cos2";
    r.get("domain", "amplitude", amp);
    r.get("domain", "mode", mode);
    c.domain = DomainSpec::perturbed_wulff(radius, amp, mode);
  } else {
    throw r.error("domain", "kind", "unknown domain kind '" + kind + "' (ball, wulff, ellipsoid, perturbed_wulff)");
  }

  r.get_list("run", "p", c.p);
  r.get_list("run", "q", c.q);
  r.get("run", "seed", c.seed);
  r.get("run", "output", c.output);
  r.get("run", "threads", c.threads);
  r.get("run", "deterministic", c.deterministic);
  r.get_list("run", "checks", c.checks);
  r.get("run", "tolerance", c.tolerance);
  static const std::set<std::string> known_checks{"norm", "wulff", "capacity", "phi", "verify", "sweep", "identities"};
  for (const auto& ch : c.checks)
    if (!known_checks.count(ch)) throw r.error("run", "checks", "unknown check '" + ch + "'");

  auto& s = c.solver;
  r.get("solver", "radial", s.radial);
  r.get("solver", "polar", s.angular.polar);
  r.get("solver", "azimuth", s.angular.azimuth);
  r.get("solver", "r_out", s.r_out);
  r.get("solver", "r_out_factor", s.r_out_factor);
  r.get("solver", "delta0", s.delta0);
  r.get("solver", "delta_factor", s.delta_factor);
  r.get("solver", "delta_final", s.delta_final);
  r.get("solver", "gradient_tolerance", s.gradient_tolerance);
  r.get("solver", "energy_tolerance", s.energy_tolerance);
  r.get("solver", "max_iterations", s.max_iterations);
  std::string method = "newton";
  r.get("solver", "method", method);
  if (method == "newton") s.method = Minimizer::Newton;
  else if (method == "nlcg") s.method = Minimizer::NLCG;
  else throw r.error("solver", "method", "unknown method '" + method + "' (newton, nlcg)");

  r.get("phi", "samples", c.phi.samples);
  r.get("phi", "tau_max", c.phi.tau_max);
  r.get("phi", "s_cap", c.phi.s_cap);
  std::string pm = "rays";
  r.get("phi", "method", pm);
  if (pm == "rays") c.phi.method = PhiMethod::Rays;
  else if (pm == "coarea") c.phi.method = PhiMethod::CoArea;
  else throw r.error("phi", "method", "unknown phi method '" + pm + "' (rays, coarea)");

  r.get_list("sweep", "p", c.sweep_p);
  r.get("boundary", "polar", c.boundary.polar);
  r.get("boundary", "azimuth", c.boundary.azimuth);
  r.get("identities", "kato_states", c.identities.kato_states);
  r.get("identities", "sign_states", c.identities.sign_states);
  r.get("identities", "lambda", c.identities.lambda);
  r.get_list("identities", "probe_radii", c.identities.probe_radii);

  for (double v : c.p)
    if (!(v > 1.0 && v < n)) throw r.error("run", "p", "p = " + format_number(v) + " violates 1 < p < n = " + std::to_string(n));
  if (!c.q.empty()) {
    if (c.q.size() != c.p.size()) throw r.error("run", "q", "q list must match the p list in length");
    for (const auto& e : c.exponent_pairs())
      if (!e.admissible())
        throw r.error("run", "q", "(p, q) = (" + format_number(e.p) + ", " + format_number(e.q) +
                                      ") violates q >= 1 + 1/p* = " + format_number(e.q_min()));
  }
  for (double v : c.sweep_p)
    if (!(v > 1.0 && v < n)) throw r.error("sweep", "p", "p = " + format_number(v) + " violates 1 < p < n = " + std::to_string(n));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(f.source() + ": " + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) { return read_config(IniFile::load(path)); }

}  // namespace anicap
