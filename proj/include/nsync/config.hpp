#pragma once

// Sectioned key = value run configuration shared by every CLI command.
// One binding table drives parsing, overrides and the resolved dump, so a
// dumped config always parses back to the same values.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

#include "nsync/mde.hpp"
#include "nsync/model.hpp"
#include "nsync/stochastic.hpp"
#include "nsync/syncstat.hpp"

namespace nsync {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForcingSection {
  std::string type = "random_phase";  // random_phase | harmonic_white | filtered
  double P = 0.2;
  double omega = 0.95;
  double rho = 2e-5;
  double s = 0.0;
  double zeta = 0.1;
  double omega_n = 1.0;
};

struct SimSection {
  SimConfig run;
  std::vector<OscState> ics{{2.0, 2.0}, {-0.5, 0.0}};
};

struct MctSection {
  MctConfig grid;
  std::vector<double> omegas{0.8, 0.95};
  std::vector<double> cs{0.04};
};

struct SweepSection {
  double omega_lo = 0.7;
  double omega_hi = 1.0;
  int n_steps = 120;
  int settle_periods = 200;
  int measure_periods = 50;
  MomentState q0{0.5, 0.0, 0.01, 0.0, 0.01};
};

struct ContinuationSection {
  double c_lo = 0.03;
  double c_hi = 0.06;
  double delta_c = 1e-3;
  double c_seed = 0.04;
  double omega_lo = 0.88;
  double omega_hi = 0.96;
  int m = 1;
};

struct MdeSection {
  std::string phase_factor = "constant";  // constant | decaying
  std::string variance_domain = "clamp";        // clamp | strict
  int steps_per_period = 128;
};

struct PoincareSection {
  double omega = 0.9;
  MomentState q0{0.5, 2.5, 10.0, 2.0, 8.0};
  int transient = 1000;
  int probe = 200;
  int iters = 500;
  double tol = 1e-6;
};

struct RunConfig {
  OscillatorParams model;
  ForcingSection forcing;
  SimSection sim;
  MctSection mct;
  SweepSection sweep;
  ContinuationSection continuation;
  MdeSection mde;
  PoincareSection poincare;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("not a number: '" + raw + "'");
  return v;
}

template <typename I>
I parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  I v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("not an integer: '" + raw + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(parse_double(t));
  if (v.empty()) throw ConfigError("empty list");
  return v;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

inline MomentState parse_moments(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 5) throw ConfigError("moment state needs 5 values m1,m2,s11,s12,s22");
  return {v[0], v[1], v[2], v[3], v[4]};
}

inline std::string fmt_moments(const MomentState& q) {
  return fmt_list({q.m1, q.m2, q.s11, q.s12, q.s22});
}

inline std::vector<OscState> parse_ics(const std::string& s) {
  std::vector<OscState> out;
  for (const auto& pair : split(s, ';')) {
    const auto v = parse_list(pair);
    if (v.size() != 2) throw ConfigError("initial condition needs x1,x2: '" + pair + "'");
    out.push_back({v[0], v[1]});
  }
  if (out.empty()) throw ConfigError("no initial conditions");
  return out;
}

inline std::string fmt_ics(const std::vector<OscState>& ics) {
  std::string out;
  for (std::size_t i = 0; i < ics.size(); ++i)
    out += (i ? ";" : "") + fmt(ics[i].x1) + "," + fmt(ics[i].x2);
  return out;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline Binding bind(const char* sec, const char* key, double& v) {
  return {sec, key, [&v](const std::string& s) { v = parse_double(s); }, [&v] { return fmt(v); }};
}
template <typename I>
  requires std::is_integral_v<I>
Binding bind(const char* sec, const char* key, I& v) {
  return {sec, key, [&v](const std::string& s) { v = parse_int<I>(s); },
          [&v] { return std::to_string(v); }};
}
inline Binding bind(const char* sec, const char* key, std::string& v,
                    std::vector<std::string> allowed) {
  return {sec, key,
          [&v, allowed](const std::string& s) {
            const std::string t = trim(s);
            for (const auto& a : allowed)
              if (a == t) {
                v = t;
                return;
              }
            std::string msg = "'" + t + "' is not one of:";
            for (const auto& a : allowed) msg += " " + a;
            throw ConfigError(msg);
          },
          [&v] { return v; }};
}
inline Binding bind(const char* sec, const char* key, std::vector<double>& v) {
  return {sec, key, [&v](const std::string& s) { v = parse_list(s); }, [&v] { return fmt_list(v); }};
}
inline Binding bind(const char* sec, const char* key, MomentState& v) {
  return {sec, key, [&v](const std::string& s) { v = parse_moments(s); },
          [&v] { return fmt_moments(v); }};
}
inline Binding bind(const char* sec, const char* key, std::vector<OscState>& v) {
  return {sec, key, [&v](const std::string& s) { v = parse_ics(s); }, [&v] { return fmt_ics(v); }};
}

inline std::vector<Binding> bindings(RunConfig& c) {
  return {
      bind("model", "c", c.model.c),
      bind("model", "k", c.model.k),
      bind("model", "mu", c.model.mu),
      bind("model", "Q", c.model.Q),
      bind("model", "g_slope", c.model.g_slope),

      bind("forcing", "type", c.forcing.type, {"random_phase", "harmonic_white", "filtered"}),
      bind("forcing", "P", c.forcing.P),
      bind("forcing", "omega", c.forcing.omega),
      bind("forcing", "rho", c.forcing.rho),
      bind("forcing", "s", c.forcing.s),
      bind("forcing", "zeta", c.forcing.zeta),
      bind("forcing", "omega_n", c.forcing.omega_n),

      bind("sim", "dt", c.sim.run.dt),
      bind("sim", "t_end", c.sim.run.t_end),
      bind("sim", "seed", c.sim.run.seed),
      bind("sim", "record_stride", c.sim.run.record_stride),
      bind("sim", "ics", c.sim.ics),

      bind("mct", "x1_lo", c.mct.grid.x1_lo),
      bind("mct", "x1_hi", c.mct.grid.x1_hi),
      bind("mct", "x2_lo", c.mct.grid.x2_lo),
      bind("mct", "x2_hi", c.mct.grid.x2_hi),
      bind("mct", "grid_m", c.mct.grid.grid_m),
      bind("mct", "K", c.mct.grid.K),
      bind("mct", "epsilon", c.mct.grid.epsilon),
      bind("mct", "t_max", c.mct.grid.t_max),
      bind("mct", "dt", c.mct.grid.dt),
      bind("mct", "record_stride", c.mct.grid.record_stride),
      bind("mct", "omegas", c.mct.omegas),
      bind("mct", "cs", c.mct.cs),

      bind("sweep", "omega_lo", c.sweep.omega_lo),
      bind("sweep", "omega_hi", c.sweep.omega_hi),
      bind("sweep", "n_steps", c.sweep.n_steps),
      bind("sweep", "settle_periods", c.sweep.settle_periods),
      bind("sweep", "measure_periods", c.sweep.measure_periods),
      bind("sweep", "q0", c.sweep.q0),

      bind("continuation", "c_lo", c.continuation.c_lo),
      bind("continuation", "c_hi", c.continuation.c_hi),
      bind("continuation", "delta_c", c.continuation.delta_c),
      bind("continuation", "c_seed", c.continuation.c_seed),
      bind("continuation", "omega_lo", c.continuation.omega_lo),
      bind("continuation", "omega_hi", c.continuation.omega_hi),
      bind("continuation", "m", c.continuation.m),

      bind("mde", "phase_factor", c.mde.phase_factor, {"constant", "decaying"}),
      bind("mde", "variance_domain", c.mde.variance_domain, {"clamp", "strict"}),
      bind("mde", "steps_per_period", c.mde.steps_per_period),

      bind("poincare", "omega", c.poincare.omega),
      bind("poincare", "q0", c.poincare.q0),
      bind("poincare", "transient", c.poincare.transient),
      bind("poincare", "probe", c.poincare.probe),
      bind("poincare", "iters", c.poincare.iters),
      bind("poincare", "tol", c.poincare.tol),
  };
}

}  // namespace detail

/// Sets `section.key` from its textual value. Unknown keys are errors.
inline void set_value(RunConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value) {
  for (auto& b : detail::bindings(cfg)) {
    if (b.section == section && b.key == key) {
      try {
        b.set(value);
      } catch (const ConfigError& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + section + "." + key + "'");
}

/// `section.key=value`, the form taken by --set.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string lhs = detail::trim(assignment.substr(0, eq));
  const auto dot = lhs.find('.');
  if (eq == std::string::npos || dot == std::string::npos)
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  set_value(cfg, lhs.substr(0, dot), lhs.substr(dot + 1), assignment.substr(eq + 1));
}

inline void parse_config(RunConfig& cfg, std::istream& in, const std::string& origin = "<config>") {
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    if (section.empty()) throw ConfigError(where() + "key outside of a [section]");
    try {
      set_value(cfg, section, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig cfg;
  parse_config(cfg, in, path);
  return cfg;
}

/// Full resolved configuration in the input format.
inline std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out, section;
  for (const auto& b : detail::bindings(copy)) {
    if (b.section != section) {
      section = b.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += b.key + " = " + b.get() + "\n";
  }
  return out;
}

inline ForcingSpec forcing_spec(const RunConfig& cfg) {
  const auto& f = cfg.forcing;
  if (f.type == "random_phase") return RandomPhase{f.P, f.omega, f.rho};
  if (f.type == "harmonic_white") return HarmonicWhite{f.P, f.omega, f.s};
  return Filtered{f.s, f.zeta, f.omega_n};
}

inline MdeParams mde_params(const RunConfig& cfg, double omega) {
  MdeParams p;
  p.osc = cfg.model;
  p.P = cfg.forcing.P;
  p.rho = cfg.forcing.rho;
  p.omega = omega;
  p.phase_factor_mode = cfg.mde.phase_factor == "decaying" ? PhaseFactorMode::decaying
                                                           : PhaseFactorMode::constant;
  p.variance_domain =
      cfg.mde.variance_domain == "strict" ? VarianceDomain::strict : VarianceDomain::clamp;
  p.steps_per_period = cfg.mde.steps_per_period;
  return p;
}

/// Section-level checks mirroring each module's invariants.
inline void validate(const RunConfig& cfg) {
  auto wrap = [](const char* sec, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("[") + sec + "] " + e.what());
    }
  };
  wrap("model", [&] { cfg.model.validate(); });
  wrap("forcing", [&] { nsync::validate(forcing_spec(cfg)); });
  wrap("sim", [&] { cfg.sim.run.validate(); });
  wrap("mct", [&] { cfg.mct.grid.validate(); });
  wrap("mde", [&] { mde_params(cfg, 1.0).validate(); });
  const auto& s = cfg.sweep;
  if (!(s.omega_lo > 0.0) || !(s.omega_hi > s.omega_lo))
    throw ConfigError("[sweep] need 0 < omega_lo < omega_hi");
  if (s.n_steps < 1 || s.settle_periods < 0 || s.measure_periods < 1)
    throw ConfigError("[sweep] need n_steps >= 1, settle_periods >= 0, measure_periods >= 1");
  const auto& c = cfg.continuation;
  if (!(c.c_lo <= c.c_seed && c.c_seed <= c.c_hi))
    throw ConfigError("[continuation] need c_lo <= c_seed <= c_hi");
  if (!(c.delta_c > 0.0)) throw ConfigError("[continuation] delta_c must be > 0");
  if (!(c.omega_lo > 0.0) || !(c.omega_hi > c.omega_lo))
    throw ConfigError("[continuation] need 0 < omega_lo < omega_hi");
  if (c.m < 1) throw ConfigError("[continuation] m must be >= 1");
  const auto& p = cfg.poincare;
  if (!(p.omega > 0.0)) throw ConfigError("[poincare] omega must be > 0");
  if (p.transient < 1 || p.probe < 1 || p.iters < 1)
    throw ConfigError("[poincare] iteration budgets must be >= 1");
  for (double w : cfg.mct.omegas)
    if (!(w > 0.0)) throw ConfigError("[mct] omegas must be > 0");
  for (double cc : cfg.mct.cs)
    if (!(cc >= 0.0)) throw ConfigError("[mct] cs must be >= 0");
}

}  // namespace nsync
