#pragma once

// Command-line front end. run() is the whole program minus the process
// boundary, so tests drive it with string vectors and string streams.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "assembler.hpp"
#include "concentration.hpp"
#include "core.hpp"
#include "detail/format.hpp"
#include "exact_family.hpp"
#include "perturb.hpp"
#include "schrod1d.hpp"

namespace grushin::cli {

inline constexpr const char* version = "grushin 0.1.0";

enum ExitCode : int { ok = 0, compute_error = 1, usage_error = 2, undecided = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses decimal radians or fractions of pi: "1.5", "pi", "-pi/2", "3pi/4", "2*pi/3".
inline double parse_angle(std::string_view text) {
  const auto at = text.find("pi");
  double out = 0.0;
  if (at == std::string_view::npos) {
    if (!detail::parse_double(text, out) || !std::isfinite(out)) throw UsageError("bad angle '" + std::string(text) + "'");
    return out;
  }
  auto coef_text = text.substr(0, at);
  if (coef_text.ends_with('*')) coef_text.remove_suffix(1);
  double coef = 1.0;
  if (coef_text == "-")
    coef = -1.0;
  else if (!coef_text.empty() && coef_text != "+" && !detail::parse_double(coef_text, coef))
    throw UsageError("bad angle coefficient in '" + std::string(text) + "'");
  auto rest = text.substr(at + 2);
  double denom = 1.0;
  if (!rest.empty()) {
    if (!rest.starts_with('/') || !detail::parse_double(rest.substr(1), denom) || !(denom > 0.0))
      throw UsageError("bad angle denominator in '" + std::string(text) + "'");
  }
  return coef * pi / denom;
}

// ---------------------------------------------------------------------------
// RunConfig

struct RunConfig {
  std::string command;
  std::string experiment;
  std::map<std::string, std::string> values;  // resolved flag values, keyed without dashes
  std::set<std::string> explicit_keys;        // set by a flag or the config file

  const std::string& str(const std::string& key) const { return values.at(key); }

  double real(const std::string& key) const {
    double v = 0.0;
    if (!detail::parse_double(str(key), v) || !std::isfinite(v))
      throw UsageError("--" + key + " expects a number, got '" + str(key) + "'");
    return v;
  }

  long long integer(const std::string& key) const {
    long long v = 0;
    if (!detail::parse_int(str(key), v)) throw UsageError("--" + key + " expects an integer, got '" + str(key) + "'");
    return v;
  }

  Tolerances tolerances() const {
    Tolerances t{real("eig-rel"), real("cluster-abs"), real("quad-rel")};
    if (!(t.eig_rel > 0.0 && t.cluster_abs > 0.0 && t.quad_rel > 0.0))
      throw UsageError("tolerances must be strictly positive");
    return t;
  }
};

namespace detail {

using grushin::detail::format_double;
using grushin::detail::parse_double;
using grushin::detail::parse_int;

enum class Kind { text, real, integer };

struct KeySpec {
  const char* name;
  Kind kind;
  const char* fallback;
  const char* help;
};

inline const std::vector<KeySpec>& keys() {
  static const std::vector<KeySpec> k{
      {"potential", Kind::text, "power:gamma=1", "potential spec (power:, torus:, shifted:, table:)"},
      {"s2", Kind::text, "0", "s^2 of the exact family: p, p/q or sqrtN"},
      {"emax", Kind::real, "10", "spectral cap"},
      {"mode", Kind::text, "auto", "exact | numeric | auto"},
      {"format", Kind::text, "json", "json | csv"},
      {"output", Kind::text, "", "output file (default stdout)"},
      {"k", Kind::integer, "1", "Fourier mode"},
      {"n", Kind::integer, "0", "level index (0-based) or level count for property-p"},
      {"m", Kind::integer, "1", "eigenvalue index (1-based)"},
      {"count", Kind::integer, "10", "number of levels for solve1d"},
      {"levels", Kind::text, "0,1,2", "comma-separated levels to track"},
      {"samples", Kind::integer, "4", "Weyl samples, decades below emax"},
      {"e", Kind::text, "", "target eigenvalue"},
      {"a", Kind::text, "0", "strip lower angle"},
      {"b", Kind::text, "pi", "strip upper angle"},
      {"w", Kind::text, "1@-1:1:0.2", "perturbation direction amp@lo:hi:eps[+...]"},
      {"t", Kind::real, "0.05", "perturbation size"},
      {"tmax", Kind::real, "0.05", "branch tracking end point"},
      {"steps", Kind::integer, "16", "branch tracking steps"},
      {"nseq", Kind::integer, "10", "continuity sequence length"},
      {"krange", Kind::integer, "4", "k range for property-p"},
      {"eig-rel", Kind::real, "1e-7", "relative eigenvalue accuracy"},
      {"cluster-abs", Kind::real, "1e-4", "multiplicity cluster width"},
      {"quad-rel", Kind::real, "1e-10", "quadrature accuracy"},
      {"seed", Kind::integer, "0", "seed for randomized sweeps"},
      {"workers", Kind::integer, "1", "worker threads (GRUSHIN_THREADS overrides)"},
  };
  return k;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

inline std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

inline void apply_config_file(const std::string& path, std::map<std::string, std::string>& values) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (!find_key(key)) throw UsageError("unknown config key '" + key + "'");
    if (val.is_string())
      values[key] = val.get<std::string>();
    else if (val.is_number())
      values[key] = val.dump();
    else
      throw UsageError("config key '" + key + "' must be a string or a number");
  }
}

/// Resolved configuration as embedded in JSON output. Workers are left out:
/// results do not depend on them.
inline nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["command"] = cfg.command;
  if (!cfg.experiment.empty()) j["experiment"] = cfg.experiment;
  for (const auto& k : keys()) {
    const std::string name = k.name;
    if (name == "workers") continue;
    switch (k.kind) {
      case Kind::real: j[name] = cfg.real(name); break;
      case Kind::integer: j[name] = cfg.integer(name); break;
      default: j[name] = cfg.str(name);
    }
  }
  return j;
}

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json contributors_json(const std::vector<Contributor>& cs) {
  auto arr = nlohmann::json::array();
  for (const auto& c : cs) arr.push_back({{"k", c.k}, {"n", c.n}});
  return arr;
}

inline std::string contributors_csv(const std::vector<Contributor>& cs) {
  std::string s;
  for (const auto& c : cs) {
    if (!s.empty()) s += ';';
    s += std::to_string(c.k) + ":" + std::to_string(c.n);
  }
  return s;
}

inline std::string line_value(const SpectrumLine& l) {
  return l.exact.empty() ? format_double(l.value) : l.exact;
}

inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long long v = 0;
    if (!parse_int(item, v) || v < 0 || v > 10000) throw UsageError("bad level '" + item + "' in --levels");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw UsageError("--levels is empty");
  return out;
}

/// Wraps library parse/argument errors raised while validating flags.
template <class Fn>
auto validated(const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw UsageError("--" + key + ": " + e.what());
  }
}

struct Result {
  nlohmann::json json;
  std::string csv;
  bool undecided = false;
};

inline std::string verdict_of(bool pass) { return to_string(pass ? Verdict::pass : Verdict::fail); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands. Each validates everything it reads before computing.

namespace detail {

/// --s2 alone selects the exact family x^2 + s2; otherwise --potential is used.
inline Potential source_potential(const RunConfig& cfg) {
  const bool s2 = cfg.explicit_keys.count("s2") > 0;
  const bool pot = cfg.explicit_keys.count("potential") > 0;
  if (s2 && pot) throw UsageError("give either --s2 or --potential, not both");
  if (s2) {
    auto v = validated("s2", [&] { return parse_exact_scalar(cfg.str("s2")); });
    if (v.is_negative()) throw UsageError("--s2 must be non-negative");
    return Potential::shifted(std::move(v));
  }
  return validated("potential", [&] { return parse_potential(cfg.str("potential")); });
}

inline Result cmd_spectrum(const RunConfig& cfg, const Execution& exec) {
  const auto v = source_potential(cfg);
  const double emax = cfg.real("emax");
  if (!(emax > 0.0)) throw UsageError("--emax must be positive");
  const auto tol = cfg.tolerances();
  const auto& mode_text = cfg.str("mode");
  AssemblyMode mode = v.is_exact_family() ? AssemblyMode::exact : AssemblyMode::numeric;
  if (mode_text == "exact") {
    if (!v.is_exact_family()) throw UsageError("--mode exact needs a shifted:s2=... potential");
    mode = AssemblyMode::exact;
  } else if (mode_text == "numeric") {
    mode = AssemblyMode::numeric;
  } else if (mode_text != "auto") {
    throw UsageError("--mode must be exact, numeric or auto");
  }

  const auto spec = assemble(v, emax, mode, tol, exec);
  Result r;
  r.undecided = spec.undecided_count() > 0;
  auto lines = nlohmann::json::array();
  r.csv = "value,multiplicity,contributors\n";
  for (const auto& l : spec.lines) {
    nlohmann::json jl{{"value", num(l.value)},
                      {"mult", l.multiplicity()},
                      {"contributors", contributors_json(l.contributors)},
                      {"err_est", num(l.err_est)},
                      {"undecided", l.undecided}};
    if (!l.exact.empty()) jl["exact"] = l.exact;
    lines.push_back(std::move(jl));
    r.csv += line_value(l) + "," + std::to_string(l.multiplicity()) + "," + contributors_csv(l.contributors) + "\n";
  }
  r.json = {{"e_max", emax},
            {"mode", to_string(spec.mode)},
            {"k_cut", spec.k_cut},
            {"lines", std::move(lines)},
            {"undecided", spec.undecided_count()},
            {"warnings", spec.warnings}};
  return r;
}

inline Result cmd_weyl(const RunConfig& cfg, const Execution& exec) {
  const auto s2 = validated("s2", [&] { return parse_exact_scalar(cfg.str("s2")); });
  if (s2.is_negative()) throw UsageError("--s2 must be non-negative");
  const double emax = cfg.real("emax");
  const long long n = cfg.integer("samples");
  if (n < 1 || n > 18) throw UsageError("--samples must be in [1, 18]");
  std::vector<double> es;
  for (long long i = n - 1; i >= 0; --i) es.push_back(emax / std::pow(10.0, static_cast<double>(i)));
  if (!(es.front() > 0.0)) throw UsageError("--emax too small for the requested samples");
  const auto rows = weyl_residual(es, s2, exec);
  Result r;
  auto samples = nlohmann::json::array();
  r.csv = "E,N,residual\n";
  for (const auto& s : rows) {
    samples.push_back({{"E", s.e}, {"N", s.count}, {"residual", num(s.residual)}});
    r.csv += format_double(s.e) + "," + std::to_string(s.count) + "," + format_double(s.residual) + "\n";
  }
  r.json = {{"s2", s2.render()}, {"samples", std::move(samples)}};
  return r;
}

/// Target for irrational s2 is written "L+Q*sqrtN", as rendered by render_exact.
inline SpectrumLine multiplicity_target(const std::string& text, const ExactScalar& s2) {
  if (text.empty()) throw UsageError("--e is required");
  if (s2.is_rational()) {
    const auto e = validated("e", [&] { return parse_exact_scalar(text); });
    if (!e.is_rational()) throw UsageError("--e must be rational when s2 is rational");
    return multiplicity_enumeration(e, s2);
  }
  const auto plus = text.find('+');
  const auto star = text.find('*');
  long long lin = 0, quad = 0;
  if (plus == std::string::npos || star == std::string::npos || star < plus ||
      !parse_int(text.substr(0, plus), lin) || !parse_int(text.substr(plus + 1, star - plus - 1), quad) ||
      text.substr(star + 1) != s2.render() || lin < 0 || quad < 0)
    throw UsageError("--e must read L+Q*" + s2.render() + " for irrational s2");
  return multiplicity_enumeration(ExactEigenvalue{lin, quad}, s2);
}

inline Result cmd_multiplicity(const RunConfig& cfg, const Execution&) {
  const auto s2 = validated("s2", [&] { return parse_exact_scalar(cfg.str("s2")); });
  if (s2.is_negative()) throw UsageError("--s2 must be non-negative");
  const auto line = multiplicity_target(cfg.str("e"), s2);
  Result r;
  r.json = {{"s2", s2.render()},
            {"e", line.exact},
            {"value", num(line.value)},
            {"mult", line.multiplicity()},
            {"contributors", contributors_json(line.contributors)}};
  if (s2.is_zero()) {
    const auto target = parse_exact_scalar(cfg.str("e"));
    const auto& q = target.as_rational();
    if (q.q == 1 && q.p > 0)
      r.json["factorization"] = {{"mult", multiplicity_factorization(q.p)},
                                 {"pairwise_formula", multiplicity_pairwise_formula(q.p)},
                                 {"odd_prime_exponents", odd_prime_exponents(q.p)}};
  }
  r.csv = "value,multiplicity,contributors\n" + line.exact + "," + std::to_string(line.multiplicity()) + "," +
          contributors_csv(line.contributors) + "\n";
  return r;
}

inline Result cmd_concentration(const RunConfig& cfg, const Execution& exec) {
  const Strip w{parse_angle(cfg.str("a")), parse_angle(cfg.str("b"))};
  validated("a", [&] { w.validate(); return 0; });
  const double emax = cfg.real("emax");
  if (!(emax > 0.0)) throw UsageError("--emax must be positive");
  const auto tol = cfg.tolerances();
  const Potential v = source_potential(cfg);
  const auto& mode_text = cfg.str("mode");
  AssemblyMode mode = v.is_exact_family() ? AssemblyMode::exact : AssemblyMode::numeric;
  if (mode_text == "numeric") mode = AssemblyMode::numeric;
  else if (mode_text == "exact" && !v.is_exact_family()) throw UsageError("--mode exact needs an exact-family s2");
  else if (mode_text != "exact" && mode_text != "auto" && mode_text != "numeric")
    throw UsageError("--mode must be exact, numeric or auto");

  const auto spec = assemble(v, emax, mode, tol, exec);
  const auto cert = concentration_certificate(spec, w, exec);
  Result r;
  r.json = {{"strip", {{"a", w.a}, {"b", w.b}}},
            {"e_max", cert.e_max},
            {"c_min", num(cert.c_min)},
            {"witness_k", cert.witness_k},
            {"witness_value", num(cert.witness_value)},
            {"limit_value", num(cert.limit_value)},
            {"lines", cert.lines},
            {"mode", to_string(spec.mode)}};
  r.csv = "a,b,e_max,c_min,witness_k,limit_value\n" + format_double(w.a) + "," + format_double(w.b) + "," +
          format_double(cert.e_max) + "," + format_double(cert.c_min) + "," + std::to_string(cert.witness_k) + "," +
          format_double(cert.limit_value) + "\n";
  return r;
}

inline Result cmd_solve1d(const RunConfig& cfg, const Execution&) {
  const auto v = validated("potential", [&] { return parse_potential(cfg.str("potential")); });
  const long long k = cfg.integer("k");
  const long long count = cfg.integer("count");
  if (k == 0 || std::llabs(k) > 100000) throw UsageError("--k must be a nonzero integer of moderate size");
  if (count < 1 || count > 100000) throw UsageError("--count must be in [1, 100000]");
  const auto tol = cfg.tolerances();
  const auto sol = solve_eigen_detailed(v, static_cast<int>(k), static_cast<std::size_t>(count), tol);
  Result r;
  auto levels = nlohmann::json::array();
  r.csv = "n,lambda,err_est\n";
  for (const auto& p : sol.pairs) {
    levels.push_back({{"n", p.n}, {"lambda", num(p.lambda)}, {"err_est", num(p.err_est)}});
    r.csv += std::to_string(p.n) + "," + format_double(p.lambda) + "," + format_double(p.err_est) + "\n";
  }
  const Grid& g = sol.grids.fine;
  nlohmann::json grid{{"kind", g.is_line() ? "line" : "circle"}, {"nodes", g.size()}, {"spacing", g.spacing()}};
  if (g.is_line()) grid["half_length"] = g.half_length();
  r.json = {{"k", k}, {"levels", std::move(levels)}, {"grid", std::move(grid)}};
  return r;
}

inline Result cmd_property_p(const RunConfig& cfg, const Execution& exec) {
  const auto v = validated("potential", [&] { return parse_potential(cfg.str("potential")); });
  const long long n = cfg.integer("n");
  const long long kr = cfg.integer("krange");
  if (n < 1 || n > 10000) throw UsageError("--n (level count) must be in [1, 10000]");
  if (kr < 2 || kr > 10000) throw UsageError("--krange must be in [2, 10000]");
  const auto rep = check_property_P(v, static_cast<int>(n), static_cast<int>(kr), cfg.tolerances(), exec);
  Result r;
  r.undecided = rep.verdict == Verdict::undecided;
  auto cols = nlohmann::json::array();
  r.csv = "k,i,l,j,value_k,value_l,gap,err_bar,verdict\n";
  for (const auto& c : rep.collisions) {
    cols.push_back({{"k", c.k},
                    {"i", c.i},
                    {"l", c.l},
                    {"j", c.j},
                    {"value_k", num(c.value_k)},
                    {"value_l", num(c.value_l)},
                    {"gap", num(c.gap)},
                    {"err_bar", num(c.err_bar)},
                    {"verdict", to_string(c.verdict)}});
    r.csv += std::to_string(c.k) + "," + std::to_string(c.i) + "," + std::to_string(c.l) + "," +
             std::to_string(c.j) + "," + format_double(c.value_k) + "," + format_double(c.value_l) + "," +
             format_double(c.gap) + "," + format_double(c.err_bar) + "," + to_string(c.verdict) + "\n";
  }
  r.json = {{"check", "property-p"},
            {"levels", rep.levels},
            {"k_range", rep.k_range},
            {"exact", rep.exact},
            {"collisions", std::move(cols)},
            {"verdict", to_string(rep.verdict)}};
  return r;
}

// perturb -----------------------------------------------------------------

struct PerturbInputs {
  Potential v;
  Perturbation w;
  int k = 1;
};

inline PerturbInputs perturb_inputs(const RunConfig& cfg) {
  PerturbInputs in{validated("potential", [&] { return parse_potential(cfg.str("potential")); }),
                   validated("w", [&] { return parse_perturbation(cfg.str("w")); }), 1};
  const long long k = cfg.integer("k");
  if (k == 0 || std::llabs(k) > 100000) throw UsageError("--k must be a nonzero integer of moderate size");
  in.k = static_cast<int>(k);
  return in;
}

inline std::string series_csv(const std::string& name, const std::vector<double>& ts, const std::vector<double>& ls) {
  std::string s;
  for (std::size_t i = 0; i < ts.size() && i < ls.size(); ++i)
    s += name + "," + format_double(ts[i]) + "," + format_double(ls[i]) + "\n";
  return s;
}

inline Result perturb_report(const std::string& experiment, nlohmann::json inputs, nlohmann::json t_grid,
                             nlohmann::json lambdas, nlohmann::json slopes, nlohmann::json gap, Verdict verdict) {
  Result r;
  r.undecided = verdict == Verdict::undecided;
  r.json = {{"experiment", experiment},
            {"inputs", std::move(inputs)},
            {"t_grid", std::move(t_grid)},
            {"lambdas", std::move(lambdas)},
            {"slopes", std::move(slopes)},
            {"gap", std::move(gap)},
            {"verdict", to_string(verdict)}};
  r.csv = "series,t,lambda\n";
  return r;
}

inline Result cmd_perturb(const RunConfig& cfg, const Execution& exec) {
  const auto tol = cfg.tolerances();
  const auto& x = cfg.experiment;
  if (x == "hf") {
    const auto in = perturb_inputs(cfg);
    const long long n = cfg.integer("n");
    if (n < 0 || n > 10000) throw UsageError("--n must be in [0, 10000]");
    const auto chk = check_slope(in.v, in.w, in.k, static_cast<int>(n), tol);
    auto r = perturb_report(
        x, {{"potential", in.v.render()}, {"w", in.w.render()}, {"k", in.k}, {"n", n}}, {0.0}, {chk.lambda},
        {{{"hf", num(chk.hf)}, {"hf_err", num(chk.hf_err)}, {"fd", num(chk.fd)}, {"delta", num(chk.delta)},
          {"rel_diff", num(chk.rel_diff)}}},
        nullptr, chk.rel_diff <= 1e-4 ? Verdict::pass : Verdict::fail);
    r.csv += "lambda,0," + format_double(chk.lambda) + "\n";
    return r;
  }
  if (x == "branch") {
    const auto in = perturb_inputs(cfg);
    const auto levels = parse_levels(cfg.str("levels"));
    const double tmax = cfg.real("tmax");
    const long long steps = cfg.integer("steps");
    if (!(tmax > 0.0)) throw UsageError("--tmax must be positive");
    if (steps < 1 || steps > 100000) throw UsageError("--steps must be in [1, 100000]");
    const auto branches = track_branches(in.v, in.w, in.k, levels, tmax, static_cast<int>(steps), tol);
    auto lambdas = nlohmann::json::array();
    auto slopes = nlohmann::json::array();
    bool ok = true;
    std::string csv;
    for (const auto& b : branches) {
      lambdas.push_back(b.lambdas);
      slopes.push_back({{"level", b.level}, {"hf", num(b.hf_slope)}, {"fd", num(b.fd_slope)},
                        {"lipschitz_ok", b.lipschitz_ok}});
      ok = ok && b.lipschitz_ok;
      csv += series_csv("level" + std::to_string(b.level), b.t_grid, b.lambdas);
    }
    auto r = perturb_report(x,
                            {{"potential", in.v.render()}, {"w", in.w.render()}, {"k", in.k}, {"levels", levels},
                             {"tmax", tmax}, {"steps", steps}},
                            branches.front().t_grid, std::move(lambdas), std::move(slopes), nullptr,
                            ok ? Verdict::pass : Verdict::fail);
    r.csv += csv;
    return r;
  }
  if (x == "split") {
    const auto s2 = validated("s2", [&] { return parse_exact_scalar(cfg.str("s2")); });
    if (!s2.is_rational() || s2.is_negative()) throw UsageError("--s2 must be a non-negative rational");
    if (cfg.str("e").empty()) throw UsageError("--e is required");
    const auto e = validated("e", [&] { return parse_exact_scalar(cfg.str("e")); });
    const auto w = validated("w", [&] { return parse_perturbation(cfg.str("w")); });
    const double t = cfg.real("t");
    if (!(t >= 0.0)) throw UsageError("--t must be non-negative");
    const auto rep = splitting_experiment(s2, e, w, t, tol, exec);
    auto lambdas = nlohmann::json::array();
    auto slopes = nlohmann::json::array();
    std::string csv;
    for (const auto& m : rep.members) {
      lambdas.push_back({m.lambda0, m.lambda_t});
      slopes.push_back({{"k", m.k}, {"n", m.n}, {"hf", num(m.hf_slope)}, {"err_est", num(m.err_est)}});
      csv += series_csv("k" + std::to_string(m.k), {0.0, t}, {m.lambda0, m.lambda_t});
    }
    auto gaps = nlohmann::json::array();
    for (const auto& p : rep.pairs)
      gaps.push_back({{"k", p.k}, {"l", p.l}, {"gap", num(p.gap)}, {"err_bar", num(p.err_bar)},
                      {"predicted", num(p.predicted)}, {"rel_deviation", num(p.rel_deviation)},
                      {"certified", p.certified}});
    auto r = perturb_report(x, {{"s2", rep.s2}, {"e", rep.e}, {"w", w.render()}, {"t", t}}, {0.0, t},
                            std::move(lambdas), std::move(slopes), std::move(gaps), rep.verdict);
    r.csv += csv;
    return r;
  }
  if (x == "gap") {
    const auto in = perturb_inputs(cfg);
    const long long m = cfg.integer("m");
    if (m < 1 || m > 10000) throw UsageError("--m must be in [1, 10000]");
    const auto rep = check_gap_avoidance(in.v, in.w, in.k, static_cast<int>(m), tol);
    auto iv = [](const Interval& i) { return nlohmann::json{i.lo, i.hi}; };
    const Verdict verdict =
        rep.violations > 0 ? Verdict::fail : (rep.undecided ? Verdict::undecided : Verdict::pass);
    auto r = perturb_report(
        x, {{"potential", in.v.render()}, {"w", in.w.render()}, {"k", in.k}, {"m", m}}, {0.0, 1.0},
        {{rep.lambda_m}, rep.perturbed}, nullptr,
        {{"lambda_m", num(rep.lambda_m)}, {"kappa_m", num(rep.kappa_m)}, {"radius", num(rep.radius)},
         {"j_minus", iv(rep.j_minus)}, {"j_plus", iv(rep.j_plus)}, {"display_minus", iv(rep.display_minus)},
         {"display_plus", iv(rep.display_plus)}, {"violations", rep.violations},
         {"display_intrusions", rep.display_intrusions}},
        verdict);
    r.csv += "base,0," + format_double(rep.lambda_m) + "\n";
    for (double p : rep.perturbed) r.csv += "perturbed,1," + format_double(p) + "\n";
    return r;
  }
  if (x == "continuity") {
    const auto in = perturb_inputs(cfg);
    const long long m = cfg.integer("m");
    const long long nseq = cfg.integer("nseq");
    if (m < 1 || m > 10000) throw UsageError("--m must be in [1, 10000]");
    if (nseq < 1 || nseq > 10000) throw UsageError("--nseq must be in [1, 10000]");
    std::vector<Perturbation> ws;
    std::vector<double> ts;
    for (long long i = 1; i <= nseq; ++i) {
      ts.push_back(1.0 / static_cast<double>(i));
      ws.push_back(in.w.scaled(ts.back()));
    }
    const auto rep = check_continuity_bound(in.v, ws, in.k, static_cast<int>(m), tol, exec);
    std::vector<double> lam;
    auto margins = nlohmann::json::array();
    for (const auto& e : rep.entries) {
      lam.push_back(e.lambda_vn);
      margins.push_back({{"w_norm", num(e.w_norm)}, {"lambda_v", num(e.lambda_v)}, {"lambda_vn", num(e.lambda_vn)},
                         {"upper_margin", num(e.upper_margin)}, {"reverse_margin", num(e.reverse_margin)},
                         {"err_est", num(e.err_est)}, {"holds", e.holds}});
    }
    auto r = perturb_report(
        x, {{"potential", in.v.render()}, {"w", in.w.render()}, {"k", in.k}, {"m", m}, {"nseq", nseq}}, ts, lam,
        nullptr, std::move(margins), rep.holds ? Verdict::pass : Verdict::fail);
    r.csv += series_csv("lambda_vn", ts, lam);
    return r;
  }
  throw UsageError("perturb needs one of hf, branch, split, gap, continuity");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {

  CLI::App app{"Spectra of Baouendi-Grushin type operators on the cylinder and torus", "grushin"};
  app.set_version_flag("--version", version);
  std::vector<std::string> positional;
  app.add_option("command", positional,
                 "spectrum | weyl | multiplicity | concentration | perturb <hf|branch|split|gap|continuity> | "
                 "check property-p | solve1d");
  std::map<std::string, std::string> given;
  std::map<std::string, CLI::Option*> opts;
  for (const auto& k : detail::keys()) opts[k.name] = app.add_option(std::string("--") + k.name, given[k.name], k.help);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with the same keys as the flags");

  RunConfig cfg;
  Execution exec;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    if (positional.empty()) throw UsageError("missing command");
    if (positional.size() > 2) throw UsageError("too many positional arguments");
    cfg.command = positional[0];
    if (positional.size() == 2) cfg.experiment = positional[1];
    const bool needs_experiment = cfg.command == "perturb" || cfg.command == "check";
    if (needs_experiment != (positional.size() == 2))
      throw UsageError(needs_experiment ? cfg.command + " needs an experiment name"
                                        : "unexpected argument '" + positional.back() + "'");

    for (const auto& k : detail::keys()) cfg.values[k.name] = k.fallback;
    std::map<std::string, std::string> from_file;
    if (!config_path.empty()) detail::apply_config_file(config_path, from_file);
    for (const auto& [key, val] : from_file) {
      cfg.values[key] = val;
      cfg.explicit_keys.insert(key);
    }
    for (const auto& [key, opt] : opts)
      if (opt->count() > 0) {
        cfg.values[key] = given[key];
        cfg.explicit_keys.insert(key);
      }

    // Every typed value is checked here, before any computation.
    (void)detail::config_json(cfg);
    cfg.tolerances();
    const auto& fmt = cfg.str("format");
    if (fmt != "json" && fmt != "csv") throw UsageError("--format must be json or csv");
    const long long workers = cfg.integer("workers");
    if (workers < 1 || workers > 1024) throw UsageError("--workers must be in [1, 1024]");
    exec = Execution::from_env(static_cast<std::size_t>(workers));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << version << "\n";
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << "\n";
    return usage_error;
  } catch (const UsageError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << "\n";
    return usage_error;
  }

  detail::Result result;
  try {
    const auto& c = cfg.command;
    if (c == "spectrum")
      result = detail::cmd_spectrum(cfg, exec);
    else if (c == "weyl")
      result = detail::cmd_weyl(cfg, exec);
    else if (c == "multiplicity")
      result = detail::cmd_multiplicity(cfg, exec);
    else if (c == "concentration")
      result = detail::cmd_concentration(cfg, exec);
    else if (c == "solve1d")
      result = detail::cmd_solve1d(cfg, exec);
    else if (c == "perturb")
      result = detail::cmd_perturb(cfg, exec);
    else if (c == "check" && cfg.experiment == "property-p")
      result = detail::cmd_property_p(cfg, exec);
    else
      throw UsageError("unknown command '" + c + (cfg.experiment.empty() ? "" : " " + cfg.experiment) + "'");
  } catch (const UsageError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << "\n";
    return usage_error;
  } catch (const SolverError& e) {
    err << "error: " << e.kind() << ": " << detail::one_line(e.what());
    if (!e.best_estimates().empty()) {
      err << " best=[";
      for (std::size_t i = 0; i < e.best_estimates().size(); ++i)
        err << (i ? "," : "") << detail::format_double(e.best_estimates()[i]);
      err << "]";
    }
    err << "\n";
    return compute_error;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << detail::one_line(e.what()) << "\n";
    return compute_error;
  } catch (const std::exception& e) {
    err << "error: internal: " << detail::one_line(e.what()) << "\n";
    return compute_error;
  }

  std::string text;
  if (cfg.str("format") == "csv") {
    text = result.csv;
  } else {
    result.json["config"] = detail::config_json(cfg);
    result.json["version"] = version;
    text = result.json.dump(2) + "\n";
  }
  const auto& path = cfg.str("output");
  if (path.empty()) {
    out << text;
  } else {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!(f << text)) {
      err << "error: io: cannot write '" << path << "'\n";
      return compute_error;
    }
  }
  return result.undecided ? undecided : ok;
}

}  // namespace grushin::cli
