#include "parahom/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "parahom/cell.hpp"
#include "parahom/config.hpp"
#include "parahom/error.hpp"
#include "parahom/experiments.hpp"
#include "parahom/report.hpp"
#include "parahom/rotation.hpp"

namespace parahom {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string(), "cannot open");
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

std::string coordinates_header(int d) { return d == 1 ? "x1" : "x1,x2"; }

std::string coordinates(const SpaceTimeGrid& g, int node) {
  const Point p = g.point(node);
  return g.d() == 1 ? format_number(p[0]) : format_number(p[0]) + "," + format_number(p[1]);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json tensor_json(const Tensor& t) {
  json rows = json::array();
  for (int i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < t.cols(); ++j) row.push_back(t(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string tensor_csv(const Tensor& t) {
  std::string out = "row,col,value\n";
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j)
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_number(t(i, j)) + "\n";
  return out;
}

struct Outcome {
  std::vector<Artifact> artifacts;
  bool pass = true;
  std::string summary;
};

Outcome run_hom(const Config& cfg, const std::string& command, const std::string& hash) {
  const CoefficientField field = make_field(cfg.sweep.coefficient);
  const CorrectorSet cs = solve_cell_problem(field, cfg.sweep.cell);
  const HomogenizedTensor hom = homogenized_tensor(cs);
  Outcome o;
  json j{{"command", command},
         {"hash", hash},
         {"config", render_config(cfg)},
         {"tensor", tensor_json(hom.entries)},
         {"mu", field.mu()},
         {"lower", hom.mu},
         {"upper", hom.mu1},
         {"sweeps", cs.sweeps},
         {"contraction", cs.contraction},
         {"periodicity_defect", cs.periodicity_defect}};
  try {
    hom_ellipticity_check(hom, field.mu());
  } catch (const CheckFailure& e) {
    o.pass = false;
    j["note"] = e.what();
  }
  j["pass"] = o.pass;
  o.summary = "lower eigenvalue " + format_number(hom.mu);

  if (command == "hom") {
    o.artifacts.push_back({"hom_tensor.csv", tensor_csv(hom.entries)});
  } else {
    const SpaceTimeGrid& g = cs.grid;
    std::string csv = "column,alpha," + std::string(g.d() == 1 ? "y1" : "y1,y2") + ",chi\n";
    for (int col = 0; col < int(cs.chi.size()); ++col) {
      const Field& chi = cs.chi[col];
      for (int node = 0; node < g.nspace(); ++node)
        for (int a = 0; a < chi.m(); ++a)
          csv += std::to_string(col) + "," + std::to_string(a) + "," + coordinates(g, node) + "," +
                 format_number(chi(0, node, a)) + "\n";
    }
    o.artifacts.push_back({command + "_" + hash + ".csv", csv});
  }
  o.artifacts.push_back({command + "_" + hash + ".json", dump(j)});
  return o;
}

Outcome run_solve(const Config& cfg, const std::string& hash) {
  const SweepConfig& c = cfg.sweep;
  const CoefficientField field = make_field(c.coefficient);
  const SpaceTimeGrid grid = sweep_grid(c);
  SolverConfig solver = c.solver;
  solver.store_stride = 1;
  solver.store_start = grid.t_end();
  std::string csv = "epsilon,t," + coordinates_header(grid.d()) + ",alpha,u\n";
  json runs = json::array();
  for (const double eps : c.epsilons) {
    StepStats stats;
    const Field u = solve_ivp(sweep_problem(c, field, eps), grid, solver, &stats);
    const SpaceTimeGrid& g = u.grid();
    const int last = g.levels() - 1;
    for (int node = 0; node < g.nspace(); ++node)
      for (int a = 0; a < u.m(); ++a)
        csv += format_number(eps) + "," + format_number(g.time(last)) + "," + coordinates(g, node) + "," +
               std::to_string(a) + "," + format_number(u(last, node, a)) + "\n";
    runs.push_back({{"epsilon", eps},
                    {"steps", stats.steps},
                    {"max_iterations", stats.max_iterations},
                    {"max_residual", stats.max_residual}});
  }
  Outcome o;
  json j{{"command", "solve"}, {"hash", hash}, {"config", render_config(cfg)}, {"runs", runs}, {"pass", true}};
  o.artifacts.push_back({"solve_" + hash + ".csv", csv});
  o.artifacts.push_back({"solve_" + hash + ".json", dump(j)});
  o.summary = std::to_string(c.epsilons.size()) + " trajectories";
  return o;
}

Outcome report_outcome(const SweepReport& rep, const Config& cfg, const std::string& command, const std::string& hash) {
  Outcome o;
  o.pass = rep.summary.pass;
  o.artifacts.push_back({command + "_" + hash + ".csv", render_csv(rep)});
  o.artifacts.push_back({command + "_" + hash + ".json", render_json(rep, command, cfg)});
  if (cfg.output.svg) o.artifacts.push_back({command + "_" + hash + ".svg", render_svg(rep)});
  o.summary = "max/min " + format_number(rep.summary.spread) + (rep.summary.note.empty() ? "" : ", " + rep.summary.note);
  return o;
}

Outcome run_rotate(const Config& cfg, const std::string& hash) {
  const auto& rows = cfg.rotation.matrix;
  const int d = int(rows.size());
  Eigen::MatrixXd O(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) O(i, j) = rows[i][j];
  const RationalRotation r = rational_rotation(O, cfg.rotation.delta);
  const bool orthogonal = exactly_orthogonal(r.matrix);
  std::string csv = "row,col,numerator,denominator,value\n";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Rational& q = r.matrix(i, j);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + numerator(q).str() + "," + denominator(q).str() +
             "," + format_number(static_cast<double>(q)) + "\n";
    }
  Outcome o;
  o.pass = orthogonal && r.error < cfg.rotation.delta;
  json j{{"command", "rotate"},       {"hash", hash},          {"config", render_config(cfg)},
         {"orthogonal", orthogonal},  {"error", r.error},       {"max_denominator", r.max_denominator.str()},
         {"pass", o.pass}};
  o.artifacts.push_back({"rotate_" + hash + ".csv", csv});
  o.artifacts.push_back({"rotate_" + hash + ".json", dump(j)});
  o.summary = "max denominator " + r.max_denominator.str();
  return o;
}

Outcome run_report(const std::string& text) {
  const StoredReport stored = report_from_json(text);
  const Config cfg = parse_config(stored.config);
  const std::string hash = config_hash(stored.command, cfg);
  if (hash != stored.hash) throw ConfigError("hash", "does not match the embedded config");
  return report_outcome(stored.report, cfg, stored.command, hash);
}

Outcome dispatch(const RunOptions& opt) {
  const std::string text = read_file(opt.config);
  if (opt.command == "report") return run_report(text);
  const Config cfg = parse_config(text, opt.command);
  const std::string hash = config_hash(opt.command, cfg);
  if (opt.command == "cell" || opt.command == "hom") return run_hom(cfg, opt.command, hash);
  if (opt.command == "solve") return run_solve(cfg, hash);
  if (opt.command == "rotate") return run_rotate(cfg, hash);
  if (opt.command == "fundsol") {
    return report_outcome(fundamental_report(cfg.sweep, run_fundamental_solution(cfg.sweep)), cfg, opt.command, hash);
  }
  return report_outcome(run_sweep(cfg.sweep), cfg, opt.command, hash);
}

}  // namespace

int run_command(const RunOptions& options, std::ostream& out, std::ostream& err) {
  if (std::find(kCommands.begin(), kCommands.end(), options.command) == kCommands.end()) {
    err << "unknown command '" << options.command << "'\n";
    return 2;
  }
  try {
    const Outcome o = dispatch(options);
    const auto paths = write_artifacts(options.out, o.artifacts);
    if (!options.quiet) {
      for (const auto& p : paths) out << p.string() << "\n";
      out << options.command << ": " << (o.pass ? "pass" : "FAIL") << " (" << o.summary << ")\n";
    }
    return o.pass ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const EllipticityError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
  } catch (const ResolutionError& e) {
    err << "resolution error: " << e.what() << " (need h <= " << e.required_h() << ", tau <= " << e.required_tau()
        << ")\n";
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic parabolic homogenization experiments", "parahom"};
  RunOptions opt;
  std::string commands;
  for (const auto& c : kCommands) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", opt.command, "one of: " + commands)->required()->check(CLI::IsMember(kCommands));
  app.add_option("--config", opt.config, "YAML config (JSON report for the report command)")->required();
  app.add_option("--out", opt.out, "output directory")->required();
  app.add_flag("--quiet", opt.quiet, "print nothing on success");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\nusage: parahom <command> --config <path> --out <dir> [--quiet]\n" << app.help();
    return 2;
  }
  return run_command(opt, out, err);
}

}  // namespace parahom
