#include "parahom/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "parahom/error.hpp"

namespace parahom {

namespace {

int line_of(const YAML::Node& n) {
  if (!n.IsDefined()) return -1;
  const YAML::Mark m = n.Mark();
  return m.is_null() ? -1 : m.line + 1;
}

[[noreturn]] void fail(const std::string& key, const std::string& what, const YAML::Node& n) {
  throw ConfigError(key, what, line_of(n));
}

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

void expect_map(const YAML::Node& n, const std::string& key) {
  if (!n.IsMap()) fail(key, "expected a mapping", n);
}

void check_keys(const YAML::Node& n, const std::string& prefix, const std::set<std::string>& allowed) {
  expect_map(n, prefix.empty() ? "config" : prefix);
  for (const auto& kv : n) {
    const std::string name = kv.first.as<std::string>();
    if (!allowed.count(name)) fail(join(prefix, name), "unknown key", kv.first);
  }
}

std::string scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(key, "expected a scalar", n);
  return n.Scalar();
}

double parse_number(const std::string& text, const std::string& key, const YAML::Node& n) {
  auto whole = [&](const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size()) fail(key, "expected a number, got '" + text + "'", n);
    return v;
  };
  const auto slash = text.find('/');
  const double v = slash == std::string::npos
                       ? whole(text)
                       : whole(text.substr(0, slash)) / whole(text.substr(slash + 1));
  if (!std::isfinite(v)) fail(key, "expected a finite number", n);
  return v;
}

double number(const YAML::Node& n, const std::string& key) { return parse_number(scalar(n, key), key, n); }

long long integer(const YAML::Node& n, const std::string& key) {
  const std::string s = scalar(n, key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'", n);
  return v;
}

int small_int(const YAML::Node& n, const std::string& key) {
  const long long v = integer(n, key);
  if (v < -1000000000LL || v > 1000000000LL) fail(key, "integer out of range", n);
  return int(v);
}

std::uint64_t unsigned_integer(const YAML::Node& n, const std::string& key) {
  const std::string s = scalar(n, key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected a nonnegative integer", n);
  return v;
}

bool boolean(const YAML::Node& n, const std::string& key) {
  const std::string s = scalar(n, key);
  if (s == "true") return true;
  if (s == "false") return false;
  fail(key, "expected true or false, got '" + s + "'", n);
}

std::vector<double> numbers(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(key, "expected a list of numbers", n);
  std::vector<double> out;
  for (const auto& e : n) out.push_back(number(e, key));
  return out;
}

std::vector<int> integers(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(key, "expected a list of integers", n);
  std::vector<int> out;
  for (const auto& e : n) out.push_back(small_int(e, key));
  return out;
}

Point point(const YAML::Node& n, const std::string& key, Point base, int d) {
  const auto v = numbers(n, key);
  if (int(v.size()) != d) fail(key, "expected " + std::to_string(d) + " entries", n);
  for (int a = 0; a < d; ++a) base[a] = v[a];
  return base;
}

template <class F>
void with(const YAML::Node& parent, const std::string& name, const std::string& prefix, F&& f) {
  const YAML::Node child = parent[name];
  const std::string key = join(prefix, name);
  if (child.IsDefined() && !child.IsNull()) f(child, key);
}

template <class E>
E enum_value(const YAML::Node& n, const std::string& key, E (*from)(const std::string&)) {
  const std::string s = scalar(n, key);
  try {
    return from(s);
  } catch (const ConfigError&) {
    fail(key, "unknown value '" + s + "'", n);
  }
}

FourierMode parse_mode(const YAML::Node& n, const std::string& key) {
  check_keys(n, key, {"row", "col", "k", "l", "amplitude", "wave"});
  FourierMode m;
  with(n, "row", key, [&](auto& v, auto& k) { m.row = small_int(v, k); });
  with(n, "col", key, [&](auto& v, auto& k) { m.col = small_int(v, k); });
  with(n, "k", key, [&](auto& v, auto& k) {
    const auto ks = integers(v, k);
    if (ks.empty() || ks.size() > 2) fail(k, "expected 1 or 2 wave numbers", v);
    m.k = {ks[0], ks.size() > 1 ? ks[1] : 0};
  });
  with(n, "l", key, [&](auto& v, auto& k) { m.l = small_int(v, k); });
  with(n, "amplitude", key, [&](auto& v, auto& k) { m.amplitude = number(v, k); });
  with(n, "wave", key, [&](auto& v, auto& k) { m.wave = enum_value(v, k, wave_from_string); });
  return m;
}

std::vector<FourierMode> parse_modes(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(key, "expected a list of modes", n);
  std::vector<FourierMode> out;
  for (const auto& e : n) out.push_back(parse_mode(e, key));
  return out;
}

void parse_coefficient(const YAML::Node& n, CoefficientSpec& s) {
  const std::string p = "coefficient";
  check_keys(n, p, {"variant", "d", "m", "tensor", "mu", "modes", "cells", "cell_shape", "profile"});
  with(n, "variant", p, [&](auto& v, auto& k) { s.variant = enum_value(v, k, variant_from_string); });
  with(n, "d", p, [&](auto& v, auto& k) { s.d = small_int(v, k); });
  with(n, "m", p, [&](auto& v, auto& k) { s.m = small_int(v, k); });
  with(n, "tensor", p, [&](auto& v, auto& k) { s.tensor = numbers(v, k); });
  with(n, "mu", p, [&](auto& v, auto& k) { s.mu = number(v, k); });
  with(n, "modes", p, [&](auto& v, auto& k) { s.modes = parse_modes(v, k); });
  with(n, "cells", p, [&](auto& v, auto& k) { s.cells = numbers(v, k); });
  with(n, "cell_shape", p, [&](auto& v, auto& k) { s.cell_shape = integers(v, k); });
  with(n, "profile", p, [&](auto& v, auto& k) {
    check_keys(v, k, {"mean", "modes"});
    with(v, "mean", k, [&](auto& w, auto& kk) { s.profile.mean = number(w, kk); });
    with(v, "modes", k, [&](auto& w, auto& kk) {
      if (!w.IsSequence()) fail(kk, "expected a list of modes", w);
      s.profile.modes.clear();
      for (const auto& e : w) {
        check_keys(e, kk, {"k", "amplitude", "wave"});
        Profile::Mode mode;
        with(e, "k", kk, [&](auto& x, auto& kx) { mode.k = small_int(x, kx); });
        with(e, "amplitude", kk, [&](auto& x, auto& kx) { mode.amplitude = number(x, kx); });
        with(e, "wave", kk, [&](auto& x, auto& kx) { mode.wave = enum_value(x, kx, wave_from_string); });
        s.profile.modes.push_back(mode);
      }
    });
  });
}

Averaging averaging_value(const YAML::Node& n, const std::string& key) {
  return enum_value(n, key, averaging_from_string);
}

/// Node for a dotted key, or its closest existing ancestor.
YAML::Node locate(const YAML::Node& root, const std::string& key) {
  YAML::Node cur = root;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!cur.IsMap()) break;
    const YAML::Node next = cur[part];
    if (!next.IsDefined()) break;
    cur = next;
  }
  return cur;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

std::string list(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string first(const Point& p, int d) { return list(std::vector<double>(p.begin(), p.begin() + d)); }

void render_modes(std::ostream& os, const std::string& indent, const std::vector<FourierMode>& modes) {
  if (modes.empty()) {
    os << " []\n";
    return;
  }
  os << "\n";
  for (const auto& m : modes) {
    os << indent << "- {row: " << m.row << ", col: " << m.col << ", k: " << list(std::vector<int>{m.k[0], m.k[1]})
       << ", l: " << m.l << ", amplitude: " << fmt(m.amplitude) << ", wave: " << to_string(m.wave) << "}\n";
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::string& command) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", "malformed YAML: " + e.msg, e.mark.is_null() ? -1 : e.mark.line + 1);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "", {"sweep", "coefficient", "domain", "grid", "data", "estimate", "geometry", "holder",
                        "weak_limit", "solver", "cell", "thresholds", "rotation", "output"});

  ExperimentKind kind = command == "fundsol" ? ExperimentKind::fundamental : ExperimentKind::convergence;
  const YAML::Node sweep = root["sweep"];
  if (sweep.IsDefined()) {
    check_keys(sweep, "sweep", {"kind", "epsilons", "seed"});
    with(sweep, "kind", "sweep", [&](auto& v, auto& k) { kind = enum_value(v, k, experiment_from_string); });
  }
  if (command == "fundsol" && kind != ExperimentKind::fundamental) {
    fail("sweep.kind", "the fundsol command runs the fundamental kind", sweep["kind"]);
  }

  Config cfg;
  SweepConfig& c = cfg.sweep;
  c = default_config(kind);
  c.epsilons.clear();
  if (sweep.IsDefined()) {
    with(sweep, "epsilons", "sweep", [&](auto& v, auto& k) { c.epsilons = numbers(v, k); });
    with(sweep, "seed", "sweep", [&](auto& v, auto& k) { c.seed = unsigned_integer(v, k); });
  }
  with(root, "coefficient", "", [&](auto& v, auto&) { parse_coefficient(v, c.coefficient); });
  const int d = c.coefficient.d;
  if (d != 1 && d != 2) fail("coefficient.d", "must be 1 or 2", locate(root, "coefficient.d"));
  c.box.d = d;

  with(root, "domain", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"lo", "hi", "t_end"});
    with(n, "lo", p, [&](auto& v, auto& k) { c.box.lo = point(v, k, c.box.lo, d); });
    with(n, "hi", p, [&](auto& v, auto& k) { c.box.hi = point(v, k, c.box.hi, d); });
    with(n, "t_end", p, [&](auto& v, auto& k) { c.t_end = number(v, k); });
  });
  with(root, "grid", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"h_divisor", "tau_divisor", "h", "tau"});
    with(n, "h_divisor", p, [&](auto& v, auto& k) { c.h_divisor = small_int(v, k); });
    with(n, "tau_divisor", p, [&](auto& v, auto& k) { c.tau_divisor = small_int(v, k); });
    with(n, "h", p, [&](auto& v, auto& k) { c.h = number(v, k); });
    with(n, "tau", p, [&](auto& v, auto& k) { c.tau = number(v, k); });
  });
  with(root, "data", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"initial", "source", "flux"});
    with(n, "initial", p, [&](auto& v, auto& k) { c.data.initial = enum_value(v, k, initial_from_string); });
    with(n, "source", p, [&](auto& v, auto& k) { c.data.source = number(v, k); });
    with(n, "flux", p, [&](auto& v, auto& k) { c.data.flux = enum_value(v, k, flux_from_string); });
  });
  with(root, "estimate", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"alpha", "p", "ps"});
    with(n, "alpha", p, [&](auto& v, auto& k) { c.alpha = number(v, k); });
    with(n, "p", p, [&](auto& v, auto& k) { c.p = number(v, k); });
    with(n, "ps", p, [&](auto& v, auto& k) { c.ps = numbers(v, k); });
  });
  with(root, "geometry", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"center", "t0", "r", "rho_fractions"});
    with(n, "center", p, [&](auto& v, auto& k) { c.geometry.center = point(v, k, c.geometry.center, d); });
    with(n, "t0", p, [&](auto& v, auto& k) { c.geometry.t0 = number(v, k); });
    with(n, "r", p, [&](auto& v, auto& k) { c.geometry.r = number(v, k); });
    with(n, "rho_fractions", p, [&](auto& v, auto& k) { c.geometry.rho_fractions = numbers(v, k); });
  });
  with(root, "holder", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"lambda", "resolution"});
    with(n, "lambda", p, [&](auto& v, auto& k) { c.holder_lambda = number(v, k); });
    with(n, "resolution", p, [&](auto& v, auto& k) { c.holder_resolution = small_int(v, k); });
  });
  with(root, "weak_limit", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"mean", "modes"});
    with(n, "mean", p, [&](auto& v, auto& k) { c.oscillation.mean = number(v, k); });
    with(n, "modes", p, [&](auto& v, auto& k) { c.oscillation.modes = parse_modes(v, k); });
  });
  with(root, "solver", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"theta", "tolerance", "max_iterations", "averaging", "store_stride", "enforce_resolution"});
    with(n, "theta", p, [&](auto& v, auto& k) { c.solver.theta = number(v, k); });
    with(n, "tolerance", p, [&](auto& v, auto& k) { c.solver.tolerance = number(v, k); });
    with(n, "max_iterations", p, [&](auto& v, auto& k) { c.solver.max_iterations = small_int(v, k); });
    with(n, "averaging", p, [&](auto& v, auto& k) { c.solver.averaging = averaging_value(v, k); });
    with(n, "store_stride", p, [&](auto& v, auto& k) { c.solver.store_stride = small_int(v, k); });
    with(n, "enforce_resolution", p, [&](auto& v, auto& k) { c.solver.enforce_resolution = boolean(v, k); });
  });
  with(root, "cell", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"space", "time", "tolerance", "max_sweeps", "averaging", "linear_tolerance"});
    with(n, "space", p, [&](auto& v, auto& k) { c.cell.space = small_int(v, k); });
    with(n, "time", p, [&](auto& v, auto& k) { c.cell.time = small_int(v, k); });
    with(n, "tolerance", p, [&](auto& v, auto& k) { c.cell.tolerance = number(v, k); });
    with(n, "max_sweeps", p, [&](auto& v, auto& k) { c.cell.max_sweeps = small_int(v, k); });
    with(n, "averaging", p, [&](auto& v, auto& k) { c.cell.averaging = averaging_value(v, k); });
    with(n, "linear_tolerance", p, [&](auto& v, auto& k) { c.cell.linear_tolerance = number(v, k); });
  });
  with(root, "thresholds", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"ratio_max", "min_span", "convergence_factor", "energy_slack", "r2_min", "kappa_min"});
    Thresholds& t = c.thresholds;
    with(n, "ratio_max", p, [&](auto& v, auto& k) { t.ratio_max = number(v, k); });
    with(n, "min_span", p, [&](auto& v, auto& k) { t.min_span = number(v, k); });
    with(n, "convergence_factor", p, [&](auto& v, auto& k) { t.convergence_factor = number(v, k); });
    with(n, "energy_slack", p, [&](auto& v, auto& k) { t.energy_slack = number(v, k); });
    with(n, "r2_min", p, [&](auto& v, auto& k) { t.r2_min = number(v, k); });
    with(n, "kappa_min", p, [&](auto& v, auto& k) { t.kappa_min = number(v, k); });
  });
  with(root, "rotation", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"matrix", "delta"});
    with(n, "matrix", p, [&](auto& v, auto& k) {
      if (!v.IsSequence()) fail(k, "expected a list of rows", v);
      cfg.rotation.matrix.clear();
      for (const auto& row : v) cfg.rotation.matrix.push_back(numbers(row, k));
      const std::size_t n_rows = cfg.rotation.matrix.size();
      for (const auto& row : cfg.rotation.matrix)
        if (row.size() != n_rows) fail(k, "matrix must be square", v);
    });
    with(n, "delta", p, [&](auto& v, auto& k) { cfg.rotation.delta = number(v, k); });
  });
  with(root, "output", "", [&](auto& n, auto& p) {
    check_keys(n, p, {"svg"});
    with(n, "svg", p, [&](auto& v, auto& k) { cfg.output.svg = boolean(v, k); });
  });

  try {
    make_field(c.coefficient);
    if (!c.epsilons.empty()) validate(c);
    else validate(c.solver);
  } catch (const ConfigError& e) {
    std::string what = e.what();
    if (what.rfind(e.key() + ": ", 0) == 0) what = what.substr(e.key().size() + 2);
    throw ConfigError(e.key(), what, line_of(locate(root, e.key())));
  } catch (const EllipticityError& e) {
    const std::string key = c.coefficient.mu ? "coefficient.mu" : "coefficient";
    throw ConfigError(key, e.what(), line_of(locate(root, key)));
  }
  if (!(cfg.rotation.delta > 0.0)) fail("rotation.delta", "must be positive", locate(root, "rotation.delta"));

  const bool needs_eps = command == "sweep" || command == "fundsol" || command == "solve";
  if (needs_eps && c.epsilons.empty()) {
    throw ConfigError("sweep.epsilons", "required for the '" + command + "' command",
                      line_of(locate(root, "sweep.epsilons")));
  }
  if (command == "rotate" && cfg.rotation.matrix.empty()) {
    throw ConfigError("rotation.matrix", "required for the 'rotate' command", line_of(locate(root, "rotation")));
  }
  return cfg;
}

std::string render_config(const Config& cfg) {
  const SweepConfig& c = cfg.sweep;
  const CoefficientSpec& s = c.coefficient;
  const int d = s.d;
  std::ostringstream os;
  os << "sweep:\n"
     << "  kind: " << to_string(c.kind) << "\n"
     << "  epsilons: " << list(c.epsilons) << "\n"
     << "  seed: " << c.seed << "\n";
  os << "coefficient:\n"
     << "  variant: " << to_string(s.variant) << "\n"
     << "  d: " << s.d << "\n"
     << "  m: " << s.m << "\n"
     << "  tensor: " << list(s.tensor) << "\n";
  if (s.mu) os << "  mu: " << fmt(*s.mu) << "\n";
  os << "  modes:";
  render_modes(os, "    ", s.modes);
  os << "  cells: " << list(s.cells) << "\n"
     << "  cell_shape: " << list(s.cell_shape) << "\n"
     << "  profile:\n"
     << "    mean: " << fmt(s.profile.mean) << "\n"
     << "    modes:";
  if (s.profile.modes.empty()) {
    os << " []\n";
  } else {
    os << "\n";
    for (const auto& m : s.profile.modes)
      os << "      - {k: " << m.k << ", amplitude: " << fmt(m.amplitude) << ", wave: " << to_string(m.wave) << "}\n";
  }
  os << "domain:\n"
     << "  lo: " << first(c.box.lo, d) << "\n"
     << "  hi: " << first(c.box.hi, d) << "\n"
     << "  t_end: " << fmt(c.t_end) << "\n";
  os << "grid:\n"
     << "  h_divisor: " << c.h_divisor << "\n"
     << "  tau_divisor: " << c.tau_divisor << "\n";
  if (c.h) os << "  h: " << fmt(*c.h) << "\n";
  if (c.tau) os << "  tau: " << fmt(*c.tau) << "\n";
  os << "data:\n"
     << "  initial: " << to_string(c.data.initial) << "\n"
     << "  source: " << fmt(c.data.source) << "\n"
     << "  flux: " << to_string(c.data.flux) << "\n";
  os << "estimate:\n"
     << "  alpha: " << fmt(c.alpha) << "\n"
     << "  p: " << fmt(c.p) << "\n"
     << "  ps: " << list(c.ps) << "\n";
  os << "geometry:\n"
     << "  center: " << first(c.geometry.center, d) << "\n"
     << "  t0: " << fmt(c.geometry.t0) << "\n"
     << "  r: " << fmt(c.geometry.r) << "\n"
     << "  rho_fractions: " << list(c.geometry.rho_fractions) << "\n";
  os << "holder:\n"
     << "  lambda: " << fmt(c.holder_lambda) << "\n"
     << "  resolution: " << c.holder_resolution << "\n";
  os << "weak_limit:\n"
     << "  mean: " << fmt(c.oscillation.mean) << "\n"
     << "  modes:";
  render_modes(os, "    ", c.oscillation.modes);
  os << "solver:\n"
     << "  theta: " << fmt(c.solver.theta) << "\n"
     << "  tolerance: " << fmt(c.solver.tolerance) << "\n"
     << "  max_iterations: " << c.solver.max_iterations << "\n"
     << "  averaging: " << to_string(c.solver.averaging) << "\n"
     << "  store_stride: " << c.solver.store_stride << "\n"
     << "  enforce_resolution: " << (c.solver.enforce_resolution ? "true" : "false") << "\n";
  os << "cell:\n"
     << "  space: " << c.cell.space << "\n"
     << "  time: " << c.cell.time << "\n"
     << "  tolerance: " << fmt(c.cell.tolerance) << "\n"
     << "  max_sweeps: " << c.cell.max_sweeps << "\n"
     << "  averaging: " << to_string(c.cell.averaging) << "\n"
     << "  linear_tolerance: " << fmt(c.cell.linear_tolerance) << "\n";
  const Thresholds& t = c.thresholds;
  os << "thresholds:\n"
     << "  ratio_max: " << fmt(t.ratio_max) << "\n"
     << "  min_span: " << fmt(t.min_span) << "\n"
     << "  convergence_factor: " << fmt(t.convergence_factor) << "\n"
     << "  energy_slack: " << fmt(t.energy_slack) << "\n"
     << "  r2_min: " << fmt(t.r2_min) << "\n"
     << "  kappa_min: " << fmt(t.kappa_min) << "\n";
  os << "rotation:\n"
     << "  matrix: [";
  for (std::size_t i = 0; i < cfg.rotation.matrix.size(); ++i) os << (i ? ", " : "") << list(cfg.rotation.matrix[i]);
  os << "]\n"
     << "  delta: " << fmt(cfg.rotation.delta) << "\n";
  os << "output:\n"
     << "  svg: " << (cfg.output.svg ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace parahom
