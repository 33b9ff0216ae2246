// Acceptance run: one line per criterion, exit status 0 only when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "parahom/cell.hpp"
#include "parahom/error.hpp"
#include "parahom/experiments.hpp"
#include "parahom/norms.hpp"
#include "parahom/report.hpp"
#include "parahom/rotation.hpp"

using namespace parahom;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- fields

CoefficientSpec fourier(std::vector<double> tensor, std::vector<FourierMode> modes, int d = 1, int m = 1) {
  CoefficientSpec s;
  s.variant = Variant::fourier;
  s.d = d;
  s.m = m;
  s.tensor = std::move(tensor);
  s.modes = std::move(modes);
  return s;
}

CoefficientSpec sine_spec() { return fourier({2.0}, {FourierMode{0, 0, {1, 0}, 0, 1.0, Wave::sine}}); }

CoefficientSpec time_only_spec() {
  CoefficientSpec s;
  s.variant = Variant::separable_time;
  s.profile.mean = 2.0;
  s.profile.modes = {{1, 1.0, Wave::cosine}};
  return s;
}

CoefficientSpec generic_1d(int v) {
  return fourier({2.0 + 0.25 * v}, {FourierMode{0, 0, {1, 0}, 1, 0.6, Wave::sine},
                                     FourierMode{0, 0, {v + 1, 0}, 2, 0.3, Wave::cosine},
                                     FourierMode{0, 0, {2, 0}, v, 0.2, Wave::sine}});
}

CoefficientSpec coupled_system() {
  return fourier({2.0, 0.5, -0.3, 3.0}, {FourierMode{0, 0, {1, 0}, 1, 0.5, Wave::sine},
                                          FourierMode{0, 1, {2, 0}, 0, 0.2, Wave::cosine},
                                          FourierMode{1, 1, {1, 0}, 2, 0.8, Wave::cosine}},
                 1, 2);
}

CoefficientSpec generic_2d() {
  return fourier({2.0, 0.4, -0.2, 1.5}, {FourierMode{0, 0, {1, 0}, 1, 0.5, Wave::sine},
                                          FourierMode{0, 1, {0, 1}, 1, 0.3, Wave::cosine},
                                          FourierMode{1, 1, {1, 1}, 0, 0.4, Wave::cosine}},
                 2, 1);
}

// ---------------------------------------------------------------- criteria

Verdict hom_oracles() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const CellOptions opt{256, 256};
  const double sine = homogenized_tensor(solve_cell_problem(make_field(sine_spec()), opt)).entries(0, 0);
  v.require(std::abs(sine - std::sqrt(3.0)) <= 1e-4, "space-only |a_hat - sqrt 3| = " + num(std::abs(sine - std::sqrt(3.0))));

  const CorrectorSet tset = solve_cell_problem(make_field(time_only_spec()), opt);
  const double time_only = homogenized_tensor(tset).entries(0, 0);
  double chi_max = 0.0;
  for (const auto& f : tset.chi)
    for (double x : f.values()) chi_max = std::max(chi_max, std::abs(x));
  v.require(std::abs(time_only - 2.0) <= 1e-6, "time-only |a_hat - 2| = " + num(std::abs(time_only - 2.0)));
  v.require(chi_max <= 1e-8, "time-only |chi|_inf = " + num(chi_max));

  CoefficientSpec c;
  c.tensor = {1.7};
  v.require(homogenized_tensor(solve_cell_problem(make_field(c), opt)).entries(0, 0) == 1.7, "constant A exact");
  CoefficientSpec c2;
  c2.m = 2;
  c2.tensor = {1.7, 0.2, -0.4, 2.3};
  const CoefficientField f2 = make_field(c2);
  v.require(homogenized_tensor(solve_cell_problem(f2, opt)).entries == f2.evaluate({0, 0}, 0), "constant system exact");

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < 30.0, "runtime " + num(secs) + " s");
  v.note("sqrt3 err " + num(std::abs(sine - std::sqrt(3.0))) + ", |chi| " + num(chi_max));
  return v;
}

Verdict formula_cross_check() {
  Verdict v;
  struct Case {
    std::string name;
    CoefficientSpec spec;
    CellOptions opt;
  };
  const std::vector<Case> cases{{"1d", generic_1d(1), {}}, {"system", coupled_system(), {}}, {"2d", generic_2d(), {32, 32}}};
  double worst_dual = 0, worst_adj = 0, worst_id = 0;
  for (const auto& c : cases) {
    const CoefficientField field = make_field(c.spec);
    const CorrectorSet fwd = solve_cell_problem(field, c.opt);
    const CorrectorSet adj = solve_adjoint_cell_problem(field, c.opt);
    const Tensor primal = homogenized_tensor(fwd).entries;
    const Tensor dual = homogenized_tensor_dual(adj).entries;
    const Tensor of_adjoint = homogenized_tensor(solve_cell_problem(adjoint_field(field), c.opt)).entries;
    const double scale = primal.norm();
    const double e_dual = (primal - dual).norm() / scale;
    const double e_adj = (of_adjoint - primal.transpose()).norm() / scale;
    const double e_id = (corrector_flux_average(fwd) - corrector_flux_average(adj).transpose()).norm() / scale;
    v.require(e_dual <= 1e-3, c.name + " primal vs dual " + num(e_dual));
    v.require(e_adj <= 1e-3, c.name + " adjoint vs transpose " + num(e_adj));
    v.require(e_id <= 1e-3, c.name + " corrector identity " + num(e_id));
    worst_dual = std::max(worst_dual, e_dual);
    worst_adj = std::max(worst_adj, e_adj);
    worst_id = std::max(worst_id, e_id);
  }
  v.note("max rel: dual " + num(worst_dual) + ", adjoint " + num(worst_adj) + ", identity " + num(worst_id));
  return v;
}

Verdict hom_ellipticity() {
  Verdict v;
  CoefficientSpec checker;
  checker.variant = Variant::checkerboard;
  checker.tensor = {1.0};
  checker.cells = {1.0, 3.0, 2.0, 0.5};
  checker.cell_shape = {2, 2};
  CoefficientSpec laminate;
  laminate.variant = Variant::separable_space;
  laminate.d = 2;
  laminate.profile.mean = 2.0;
  laminate.profile.modes = {{1, 1.0, Wave::sine}};
  CoefficientSpec diag = fourier({2.0, 0.0, 0.0, 3.0}, {FourierMode{0, 0, {1, 0}, 0, 1.0, Wave::sine},
                                                        FourierMode{1, 1, {1, 0}, 0, 2.0, Wave::cosine}},
                                 1, 2);
  CoefficientSpec sys2d = fourier({2.0, 0.1, 0.2, 0.0,  //
                                   0.0, 2.5, 0.0, 0.3,  //
                                   0.3, 0.0, 1.8, 0.1,  //
                                   0.0, -0.2, 0.0, 2.2},
                                  {FourierMode{0, 0, {1, 0}, 1, 0.4, Wave::sine}, FourierMode{3, 3, {0, 1}, 0, 0.5, Wave::cosine}},
                                  2, 2);
  struct Case {
    std::string name;
    CoefficientSpec spec;
    CellOptions opt;
  };
  const std::vector<Case> cases{{"sine", sine_spec(), {}},           {"time-only", time_only_spec(), {}},
                                {"generic0", generic_1d(0), {}},     {"generic2", generic_1d(2), {}},
                                {"checkerboard", checker, {}},       {"diag-system", diag, {}},
                                {"coupled-system", coupled_system(), {}}, {"laminate", laminate, {32, 16}},
                                {"fourier-2d", generic_2d(), {32, 16}},  {"system-2d", sys2d, {16, 16}}};
  double margin = INFINITY;
  for (const auto& c : cases) {
    const CoefficientField field = make_field(c.spec);
    const HomogenizedTensor hom = homogenized_tensor(solve_cell_problem(field, c.opt));
    try {
      const HomCertificate cert = hom_ellipticity_check(hom, field.mu(), 1e-3);
      margin = std::min(margin, cert.lower - field.mu());
    } catch (const CheckFailure& e) {
      v.require(false, c.name + ": " + e.what());
    }
  }
  v.note(std::to_string(cases.size()) + " fields, min(lower - mu) = " + num(margin));
  return v;
}

Verdict corrector_residual() {
  Verdict v;
  const auto coarse = build_grid(Box{}, 1.0 / 64, 1.0 / 256, {0.0, 1.0 / 16});
  const auto fine = build_grid(Box{}, 1.0 / 128, 1.0 / 1024, {0.0, 1.0 / 16});
  for (const auto& [name, spec] : std::vector<std::pair<std::string, CoefficientSpec>>{{"sine", sine_spec()},
                                                                                       {"generic", generic_1d(0)}}) {
    const CoefficientField field = make_field(spec);
    const CorrectorSet set = solve_cell_problem(field);
    const double r1 = corrector_equation_residual(field, set, 0.25, coarse)[0];
    const double r2 = corrector_equation_residual(field, set, 0.25, fine)[0];
    v.require(r1 / r2 >= 1.5, name + " reduction " + num(r1 / r2));
    v.note(name + " " + num(r1) + " -> " + num(r2) + " (x" + num(r1 / r2) + ")");
  }
  return v;
}

struct SweepRun {
  SweepConfig config;
  std::string csv;
};
std::vector<SweepRun> g_sweeps;

SweepReport sweep(const SweepConfig& c) {
  SweepReport rep = run_sweep(c);
  g_sweeps.push_back({c, render_csv(rep)});
  return rep;
}

SweepConfig configured(ExperimentKind kind, CoefficientSpec spec, std::vector<double> eps) {
  SweepConfig c = default_config(kind);
  c.coefficient = std::move(spec);
  c.epsilons = std::move(eps);
  return c;
}

const std::vector<double> kInteriorEps{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};

void uniform(Verdict& v, const std::string& name, const SweepReport& rep, double ratio_max = 3.0) {
  v.require(rep.summary.pass, name + " (" + rep.summary.note + ")");
  v.require(rep.summary.spread <= ratio_max, name + " max/min " + num(rep.summary.spread));
  v.note(name + " max/min " + num(rep.summary.spread));
}

Verdict homogenization_convergence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const SweepReport rep =
      sweep(configured(ExperimentKind::convergence, sine_spec(), {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32}));
  std::string errs;
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    errs += (i ? " " : "") + num(rep.records[i].lhs);
    if (i > 0) {
      const double f = rep.records[i].lhs / rep.records[i - 1].lhs;
      v.require(f < 1.0, "strict decrease at " + std::to_string(i));
      v.require(f <= 0.7, "factor " + num(f) + " at " + std::to_string(i));
    }
  }
  v.require(rep.summary.pass, "summary");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < 120.0, "runtime " + num(secs) + " s");
  v.note("e = " + errs + ", worst factor " + num(rep.summary.rate));
  return v;
}

Verdict interior_estimates() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  uniform(v, "holder", sweep(configured(ExperimentKind::interior_holder, sine_spec(), kInteriorEps)));
  uniform(v, "lipschitz", sweep(configured(ExperimentKind::interior_lipschitz, sine_spec(), kInteriorEps)));
  uniform(v, "w1p", sweep(configured(ExperimentKind::interior_w1p, sine_spec(), kInteriorEps)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < 300.0, "runtime " + num(secs) + " s");
  return v;
}

Verdict boundary_estimates() {
  Verdict v;
  uniform(v, "decay", sweep(configured(ExperimentKind::boundary_holder, sine_spec(), kInteriorEps)));
  uniform(v, "gradient", sweep(configured(ExperimentKind::boundary_w1p, sine_spec(), kInteriorEps)));
  return v;
}

Verdict global_w1p() {
  Verdict v;
  SweepConfig c = configured(ExperimentKind::global_w1p, sine_spec(), kInteriorEps);
  c.ps = {2.0, 4.0};
  const SweepReport rep = sweep(c);
  uniform(v, "w1p", rep);
  const double mu = make_field(c.coefficient).mu();
  double worst = 0;
  for (const auto& r : rep.records)
    if (r.metric == "w1p_p=2") worst = std::max(worst, r.ratio);
  v.require(worst <= 1.1 / mu, "p=2 ratio " + num(worst) + " > 1.1/mu");
  v.note("p=2 max ratio " + num(worst) + " vs 1.1/mu " + num(1.1 / mu));
  return v;
}

Verdict energy_ratios() {
  Verdict v;
  const Box box{};
  const SpaceTimeGrid grid = build_grid(box, 1.0 / 128, 1.0 / 1024, {0.0, 0.125});
  const Cylinder q{CylinderKind::interior, {0.5, 0.0}, 0.125, 0.125};
  const Cylinder q2 = q.scaled(2.0);
  double worst_c = 0, worst_p = 0;
  int runs = 0;
  for (const auto& spec : {sine_spec(), generic_1d(0), time_only_spec()}) {
    const CoefficientField field = make_field(spec);
    for (double eps : {0.25, 0.125}) {
      for (FluxData flux : {FluxData::none, FluxData::sine}) {
        SweepConfig c = default_config(ExperimentKind::interior_holder);
        c.coefficient = spec;
        c.data.initial = InitialData::sine;
        c.data.flux = flux;
        const ParabolicProblem p = sweep_problem(c, field, eps);
        const Field u = solve_ivp(p, grid, SolverConfig{});
        Field f(u.grid(), 1);
        if (p.f)
          for (int l = 0; l < u.grid().levels(); ++l)
            for (int n = 0; n < u.grid().nspace(); ++n) f(l, n, 0) = p.f(u.grid().point(n), u.grid().time(l), 0, 0);
        const Field* fp = p.f ? &f : nullptr;
        const double rc = caccioppoli_ratio(u, fp, nullptr, q, q2);
        const double rp = poincare_ratio(u, fp, q, q2);
        worst_c = std::max(worst_c, rc);
        worst_p = std::max(worst_p, rp);
        ++runs;
      }
    }
  }
  v.require(worst_c <= 100.0, "caccioppoli " + num(worst_c));
  v.require(worst_p <= 100.0, "poincare " + num(worst_p));

  SweepConfig zero = default_config(ExperimentKind::interior_holder);
  zero.data.initial = InitialData::zero;
  const CoefficientField field = make_field(sine_spec());
  const Field u0 = solve_ivp(sweep_problem(zero, field, 0.25), grid, SolverConfig{});
  const double zc = caccioppoli_ratio(u0, nullptr, nullptr, q, q2);
  const double zp = poincare_ratio(u0, nullptr, q, q2);
  v.require(zc == 0.0 && zp == 0.0, "zero solution ratios " + num(zc) + ", " + num(zp));
  v.note(std::to_string(runs) + " runs, max caccioppoli " + num(worst_c) + ", max poincare " + num(worst_p));
  return v;
}

Verdict fundamental_solution() {
  Verdict v;
  SweepConfig heat = default_config(ExperimentKind::fundamental);
  heat.coefficient = CoefficientSpec{};
  heat.epsilons = {1.0};
  heat.h = 1.0 / 32;
  heat.tau = 1.0 / 1024;
  const GaussianFit g = run_fundamental_solution(heat).at(0);
  const double exact = 1.0 / std::sqrt(4.0 * kPi);
  v.require(std::abs(g.value_at_origin - exact) <= 0.02 * exact, "Gamma(0,1) = " + num(g.value_at_origin));
  v.require(std::abs(g.kappa - 0.25) <= 0.05 * 0.25, "kappa = " + num(g.kappa));
  v.require(g.mass_defect <= 1e-8, "heat mass defect " + num(g.mass_defect));
  v.note("Gamma(0,1) " + num(g.value_at_origin) + ", kappa " + num(g.kappa));

  SweepConfig osc = configured(ExperimentKind::fundamental, sine_spec(), {1.0 / 2, 1.0 / 4, 1.0 / 8});
  osc.coefficient.mu = 1.0 / 3.0;
  const auto fits = run_fundamental_solution(osc);
  g_sweeps.push_back({osc, render_csv(fundamental_report(osc, fits))});
  double kmin = INFINITY, mass = 0;
  for (const auto& f : fits) {
    kmin = std::min(kmin, f.kappa);
    mass = std::max(mass, f.mass_defect);
  }
  v.require(kmin >= 0.05, "oscillating min kappa " + num(kmin));
  v.require(mass <= 1e-8, "oscillating mass defect " + num(mass));
  v.note("oscillating min kappa " + num(kmin) + ", mass defect " + num(std::max(mass, g.mass_defect)));
  return v;
}

Verdict rescaling() {
  Verdict v;
  const auto grid = build_grid(Box{}, 1.0 / 64, 1.0 / 256, {0.0, 1.0 / 16});
  RescalingProblem a;
  a.field = make_field(sine_spec());
  a.epsilon = 0.25;
  a.h0 = [](const Point& x, double, int) { return std::sin(kPi * x[0]); };
  a.F = [](const Point& x, double t, int) { return x[0] * (1 - x[0]) * (1 + t); };
  RescalingProblem b;
  b.field = make_field(generic_1d(1));
  b.epsilon = 0.25;
  b.h0 = [](const Point& x, double, int) { return x[0] * x[0] * (1 - x[0]); };
  b.f = [](const Point& x, double t, int, int) { return std::cos(3 * x[0]) * (1 + 2 * t); };
  b.g = [](const Point& x, double t, int) { return x[0] * t; };
  double worst = 0;
  for (const auto* p : {&a, &b})
    for (double delta : {0.5, 2.0}) worst = std::max(worst, rescaling_check(*p, grid, delta));
  v.require(worst <= 1e-10, "max discrepancy " + num(worst));
  v.note("max discrepancy " + num(worst));
  return v;
}

Verdict rational_rotations() {
  Verdict v;
  std::mt19937_64 rng(0x0507a7e5);
  std::normal_distribution<double> n(0.0, 1.0);
  int total = 0, ok = 0;
  for (int d : {2, 3}) {
    for (int trial = 0; trial < (d == 2 ? 100 : 20); ++trial) {
      Eigen::MatrixXd a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = n(rng);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      const Eigen::MatrixXd o = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
      for (double delta : {1e-2, 1e-4}) {
        ++total;
        const RationalRotation r = rational_rotation(o, delta);
        // distance in exact arithmetic against the binary value of O
        Rational worst = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) worst = std::max(worst, Rational(abs(r.matrix(i, j) - Rational(o(i, j)))));
        if (exactly_orthogonal(r.matrix) && worst < Rational(delta)) ++ok;
      }
    }
  }
  v.require(ok == total, std::to_string(total - ok) + " inputs");
  v.note(std::to_string(ok) + "/" + std::to_string(total) + " exact");
  return v;
}

Verdict weak_limits() {
  Verdict v;
  SweepConfig a = default_config(ExperimentKind::weak_limit);
  a.epsilons = {1.0 / 2, 1.0 / 4, 1.0 / 8, 1.0 / 16};
  a.oscillation.mean = 0.0;
  a.oscillation.modes = {FourierMode{0, 0, {1, 0}, 0, 1.0, Wave::sine}};
  SweepConfig b = a;
  b.oscillation.modes = {FourierMode{0, 0, {1, 0}, 1, 0.7, Wave::cosine}, FourierMode{0, 0, {2, 0}, 0, 0.4, Wave::sine}};
  for (const auto& [name, c] : std::vector<std::pair<std::string, SweepConfig>>{{"sin", a}, {"mixed", b}}) {
    const SweepReport rep = sweep(c);
    v.require(rep.summary.pass, name + " (" + rep.summary.note + ")");
    v.require(rep.summary.r2 >= 0.95, name + " R2 " + num(rep.summary.r2));
    v.note(name + " slope " + num(rep.summary.rate) + " R2 " + num(rep.summary.r2));
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  int same = 0;
  for (const auto& s : g_sweeps) {
    const std::string again = s.config.kind == ExperimentKind::fundamental
                                  ? render_csv(fundamental_report(s.config, run_fundamental_solution(s.config)))
                                  : render_csv(run_sweep(s.config));
    if (again == s.csv) ++same;
  }
  v.require(!g_sweeps.empty(), "no sweeps recorded");
  v.require(same == int(g_sweeps.size()), std::to_string(g_sweeps.size() - same) + " sweeps differ");
  v.note(std::to_string(same) + "/" + std::to_string(g_sweeps.size()) + " sweeps byte-identical");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"homogenized tensor oracles", hom_oracles},
      {"primal/dual formula cross-check", formula_cross_check},
      {"ellipticity of the homogenized tensor", hom_ellipticity},
      {"corrector equation residual", corrector_residual},
      {"homogenization convergence", homogenization_convergence},
      {"uniform interior estimates", interior_estimates},
      {"boundary estimates", boundary_estimates},
      {"global W1p estimate", global_w1p},
      {"Caccioppoli/Poincare ratios", energy_ratios},
      {"fundamental solution", fundamental_solution},
      {"rescaling identity", rescaling},
      {"rational rotations", rational_rotations},
      {"weak limits", weak_limits},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::printf("%-4s %2zu %-40s %7.1fs  %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
