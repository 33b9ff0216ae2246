#include <doctest.h>

#include "approx.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "parahom/cli.hpp"
#include "parahom/config.hpp"
#include "parahom/error.hpp"
#include "parahom/report.hpp"

using namespace parahom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("parahom_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"parahom"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<fs::path> files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string key_of(const std::string& text, const std::string& command = "") {
  try {
    parse_config(text, command);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

int line_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

const char* kConstantSweep = R"(sweep:
  kind: interior_holder
  epsilons: [1/2, 1/4, 1/8, 1/16, 1/32]
coefficient:
  variant: constant
  tensor: [2]
grid:
  h: 1/64
  tau: 1/1024
)";

Config random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ExperimentKind kinds[] = {ExperimentKind::convergence,        ExperimentKind::interior_holder,
                                  ExperimentKind::interior_lipschitz, ExperimentKind::interior_w1p,
                                  ExperimentKind::boundary_holder,    ExperimentKind::boundary_w1p,
                                  ExperimentKind::global_w1p,         ExperimentKind::fundamental,
                                  ExperimentKind::weak_limit};
  Config cfg;
  SweepConfig& c = cfg.sweep;
  c = default_config(kinds[rng() % 9]);
  c.epsilons.clear();
  const int n = 1 + int(rng() % 4), first = 1 + int(rng() % 3);
  for (int i = 0; i < n; ++i) c.epsilons.push_back(std::ldexp(1.0, -first - i));
  c.seed = rng();
  c.alpha = 0.1 + 0.8 * u(rng);
  c.thresholds.ratio_max = 1.5 + 10 * u(rng);
  c.thresholds.r2_min = u(rng);
  c.solver.theta = 0.5 + 0.5 * u(rng);
  c.solver.averaging = rng() % 2 ? Averaging::harmonic : Averaging::midpoint;
  c.cell.max_sweeps = 10 + int(rng() % 500);
  c.holder_lambda = 0.2 + 0.8 * u(rng);
  if (rng() % 2) c.h = 1.0 / 256;
  if (rng() % 2) c.tau = 1.0 / 4096;
  CoefficientSpec& s = c.coefficient;
  s.tensor = {2.0 + u(rng)};
  if (rng() % 2) {
    s.variant = Variant::fourier;
    FourierMode m;
    m.k = {1 + int(rng() % 3), 0};
    m.l = int(rng() % 3);
    m.amplitude = 0.9 * u(rng);
    m.wave = rng() % 2 ? Wave::cosine : Wave::sine;
    s.modes = {m};
  }
  if (rng() % 2) s.mu = 0.25 * u(rng) + 1e-3;
  c.oscillation.mean = u(rng);
  c.oscillation.modes = {FourierMode{0, 0, {1, 0}, int(rng() % 2), u(rng), Wave::cosine}};
  const double a = 6.283185307179586 * u(rng);
  cfg.rotation.matrix = {{std::cos(a), -std::sin(a)}, {std::sin(a), std::cos(a)}};
  cfg.rotation.delta = std::pow(10.0, -1 - 4 * u(rng));
  cfg.output.svg = rng() % 2;
  return cfg;
}

}  // namespace

TEST_CASE("config round trip over random valid configs") {
  std::mt19937_64 rng(20261015);
  for (int trial = 0; trial < 200; ++trial) {
    const Config cfg = random_config(rng);
    const std::string text = render_config(cfg);
    const Config back = parse_config(text);
    CHECK(back == cfg);
    CHECK(render_config(back) == text);
  }
}

TEST_CASE("minimal config is accepted with defaults echoed") {
  const Config cfg = parse_config("coefficient:\n  variant: constant\nsweep:\n  epsilons: [1/4]\n", "sweep");
  CHECK(cfg.sweep.epsilons == std::vector<double>{0.25});
  CHECK(cfg.sweep.coefficient.variant == Variant::constant);
  const std::string text = render_config(cfg);
  CHECK(text.find("ratio_max: 3\n") != std::string::npos);
  CHECK(text.find("theta: 1\n") != std::string::npos);
  CHECK(text.find("epsilons: [0.25]\n") != std::string::npos);
  CHECK(parse_config("") == parse_config("{}"));
}

TEST_CASE("config diagnostics name key and line") {
  CHECK(key_of("coefficient:\n  variant: constant\n  colour: red\n") == "coefficient.colour");
  CHECK(line_of("coefficient:\n  variant: constant\n  colour: red\n") == 3);
  CHECK(key_of("bogus: 1\n") == "bogus");
  CHECK(key_of("solver:\n  theta: abc\n") == "solver.theta");
  CHECK(line_of("solver:\n  theta: abc\n") == 2);
  CHECK(key_of("solver:\n  theta: 0.2\n") == "solver.theta");
  CHECK(key_of("sweep:\n  kind: nonsense\n") == "sweep.kind");
  CHECK(key_of("grid:\n  h_divisor: 2.5\n") == "grid.h_divisor");
  CHECK(key_of("output:\n  svg: maybe\n") == "output.svg");
  CHECK(key_of("sweep:\n  epsilons: 0.25\n") == "sweep.epsilons");
  CHECK(key_of("coefficient:\n  d: 3\n") == "coefficient.d");
  CHECK(key_of("sweep:\n  epsilons: [1/0]\n") == "sweep.epsilons");
  CHECK(key_of("rotation:\n  matrix: [[1, 0]]\n") == "rotation.matrix");
  CHECK(key_of("sweep: [1\n").empty());
}

TEST_CASE("required keys depend on the command") {
  const std::string no_eps = "coefficient:\n  variant: constant\n";
  CHECK(key_of(no_eps, "sweep") == "sweep.epsilons");
  CHECK(key_of(no_eps, "fundsol") == "sweep.epsilons");
  CHECK(key_of(no_eps, "solve") == "sweep.epsilons");
  CHECK(key_of(no_eps, "hom") == "<accepted>");
  CHECK(key_of(no_eps, "rotate") == "rotation.matrix");
  CHECK(parse_config("sweep:\n  epsilons: [1/2]\n", "fundsol").sweep.kind == ExperimentKind::fundamental);
  CHECK(key_of("sweep:\n  kind: convergence\n  epsilons: [1/2]\n", "fundsol") == "sweep.kind");
}

TEST_CASE("declared mu inconsistent with the modes is rejected") {
  // a = 2 + sin: range [1, 3], so the best constant is min(1, 1/3) = 1/3
  const std::string base = "coefficient:\n  variant: fourier\n  tensor: [2]\n  modes:\n    - {k: [1], amplitude: 1}\n";
  CHECK(key_of(base + "  mu: 1.0\n") == "coefficient.mu");
  try {
    parse_config(base + "  mu: 1.0\n");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 6);
  }
  CHECK(key_of(base + "  mu: 0.33\n") == "<accepted>");
  CHECK(key_of(base + "  mu: 0.34\n") == "coefficient.mu");
  CHECK(parse_config(base).sweep.coefficient.modes.at(0).amplitude == 1.0);
}

TEST_CASE("hashing and number formatting") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(format_number(0.25) == "2.500000000000e-01");
  CHECK(format_number(-3.0) == "-3.000000000000e+00");
  const Config a = parse_config("sweep:\n  epsilons: [1/4]\n");
  Config b = a;
  b.sweep.seed += 1;
  CHECK(config_hash("sweep", a).size() == 16);
  CHECK(config_hash("sweep", a) == config_hash("sweep", parse_config(render_config(a))));
  CHECK(config_hash("sweep", a) != config_hash("sweep", b));
  CHECK(config_hash("sweep", a) != config_hash("fundsol", a));
}

TEST_CASE("hom writes the harmonic mean") {
  const fs::path dir = scratch("hom");
  const fs::path cfg =
      write(dir, "a.yaml", "coefficient:\n  variant: fourier\n  tensor: [2]\n  modes:\n    - {k: [1], amplitude: 1}\n");
  const Run r = cli({"hom", "--config", cfg.string(), "--out", (dir / "out").string(), "--quiet"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const auto rows = lines(slurp(dir / "out" / "hom_tensor.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "row,col,value");
  CHECK(std::stod(split(rows[1])[2]) == approx(std::sqrt(3.0)).epsilon(1e-4));
}

TEST_CASE("usage errors exit with 2") {
  const Run unknown = cli({"frobnicate", "--config", "x.yaml", "--out", "o"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("usage: parahom <command>") != std::string::npos);
  CHECK(cli({"sweep", "--out", "o"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  std::ostringstream out, err;
  CHECK(run_command({"frobnicate", "x", "o", false}, out, err) == 2);

  const fs::path dir = scratch("usage");
  const fs::path bad = write(dir, "bad.yaml", "coefficient:\n  variant: constant\n");
  const Run missing = cli({"sweep", "--config", bad.string(), "--out", (dir / "out").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("sweep.epsilons") != std::string::npos);
  CHECK(files(dir / "out").empty());
  const Run absent = cli({"sweep", "--config", (dir / "nope.yaml").string(), "--out", (dir / "out").string()});
  CHECK(absent.code == 1);
  CHECK(absent.err.find("nope.yaml") != std::string::npos);
}

TEST_CASE("sweep artifacts: schema, row count, determinism") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write(dir, "c.yaml", std::string(kConstantSweep) + "output:\n  svg: true\n");
  const Run first = cli({"sweep", "--config", cfg.string(), "--out", (dir / "a").string()});
  REQUIRE(first.code == 0);
  const Run second = cli({"sweep", "--config", cfg.string(), "--out", (dir / "b").string(), "--quiet"});
  REQUIRE(second.code == 0);

  const auto a = files(dir / "a"), b = files(dir / "b");
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].filename() == b[i].filename());
    CHECK(slurp(a[i]) == slurp(b[i]));
  }
  const std::string hash = config_hash("sweep", parse_config(slurp(cfg), "sweep"));
  const fs::path csv = dir / "a" / ("sweep_" + hash + ".csv");
  REQUIRE(fs::exists(csv));
  const std::string text = slurp(csv);
  CHECK(text.find('\r') == std::string::npos);
  const auto rows = lines(text);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "epsilon,h,tau,metric,lhs,rhs,ratio");
  const std::string ratio = split(rows[1])[6];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i]);
    REQUIRE(cells.size() == 7);
    CHECK(cells[6] == ratio);
  }

  const auto j = nlohmann::json::parse(slurp(dir / "a" / ("sweep_" + hash + ".json")));
  CHECK(j["summary"]["pass"].get<bool>());
  CHECK(j["summary"].contains("max_ratio"));
  CHECK(j["summary"].contains("min_ratio"));
  CHECK(j["records"].size() == 5);
  CHECK(j["hash"] == hash);
  CHECK(parse_config(j["config"].get<std::string>()) == parse_config(slurp(cfg)));
  CHECK(slurp(dir / "a" / ("sweep_" + hash + ".svg")).rfind("<svg", 0) == 0);

  const Run regen = cli({"report", "--config", (dir / "a" / ("sweep_" + hash + ".json")).string(), "--out",
                         (dir / "c").string(), "--quiet"});
  CHECK(regen.code == 0);
  CHECK(slurp(dir / "c" / ("sweep_" + hash + ".csv")) == text);
}

TEST_CASE("report json round trip") {
  SweepReport rep;
  rep.kind = ExperimentKind::global_w1p;
  rep.records = {{0.5, 0.01, 1e-4, "w1p_p=2", 1.5, 0.75, 2.0}, {0.25, 0.01, 1e-4, "w1p_p=2", 0.0, 0.0, INFINITY}};
  rep.summary = {1.0, 2.0, 2.0, 2.0, 0.0, 0.0, true, false, "span too small"};
  const Config cfg = parse_config("sweep:\n  kind: global_w1p\n  epsilons: [1/2, 1/4]\n");
  const StoredReport back = report_from_json(render_json(rep, "sweep", cfg));
  CHECK(back.command == "sweep");
  CHECK(back.hash == config_hash("sweep", cfg));
  CHECK(back.report.kind == rep.kind);
  CHECK(back.report.records == rep.records);
  CHECK(back.report.summary == rep.summary);
  CHECK(parse_config(back.config) == cfg);
  CHECK_THROWS_AS(report_from_json("{\"command\": \"sweep\"}"), ConfigError);
  CHECK_THROWS_AS(report_from_json("not json"), ConfigError);
}

TEST_CASE("failures leave no artifacts") {
  const fs::path dir = scratch("partial");
  // box too small for the kernel: refusal after the config is accepted
  const fs::path cfg = write(dir, "f.yaml",
                             "sweep:\n  epsilons: [1/2]\ncoefficient:\n  variant: constant\n"
                             "domain:\n  lo: [-2]\n  hi: [2]\ngrid:\n  h: 1/16\n  tau: 1/256\n");
  const Run r = cli({"fundsol", "--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == 2);
  CHECK(files(dir / "out").empty());

  const fs::path blocker = write(dir, "file", "x");
  const Run io = cli({"sweep", "--config", write(dir, "c.yaml", kConstantSweep).string(), "--out",
                      (blocker / "sub").string()});
  CHECK(io.code == 1);
  CHECK(io.err.find("file") != std::string::npos);

  const fs::path out = dir / "busy";
  fs::create_directories(out / "second.csv");  // rename target is a non-empty directory
  fs::create_directories(out / "second.csv" / "x");
  CHECK_THROWS_AS(write_artifacts(out, {{"first.csv", "a\n"}, {"second.csv", "b\n"}}), IoError);
  CHECK(!fs::exists(out / "first.csv"));
  CHECK(!fs::exists(out / ".first.csv.tmp"));
  CHECK(!fs::exists(out / ".second.csv.tmp"));
}

TEST_CASE("rotate, solve and cell commands") {
  const fs::path dir = scratch("misc");
  const fs::path rot = write(dir, "r.yaml", "rotation:\n  matrix: [[0.8, -0.6], [0.6, 0.8]]\n  delta: 1e-6\n");
  REQUIRE(cli({"rotate", "--config", rot.string(), "--out", (dir / "r").string(), "--quiet"}).code == 0);
  const std::string hash = config_hash("rotate", parse_config(slurp(rot), "rotate"));
  const auto rows = lines(slurp(dir / "r" / ("rotate_" + hash + ".csv")));
  REQUIRE(rows.size() == 5);
  CHECK(rows[1] == "0,0,4,5,8.000000000000e-01");
  CHECK(rows[2] == "0,1,-3,5,-6.000000000000e-01");

  const fs::path solve = write(dir, "s.yaml",
                               "sweep:\n  epsilons: [1/2, 1/4]\ncoefficient:\n  variant: constant\n"
                               "grid:\n  h: 1/32\n  tau: 1/512\n");
  REQUIRE(cli({"solve", "--config", solve.string(), "--out", (dir / "s").string(), "--quiet"}).code == 0);
  const std::string sh = config_hash("solve", parse_config(slurp(solve), "solve"));
  const auto srows = lines(slurp(dir / "s" / ("solve_" + sh + ".csv")));
  CHECK(srows.size() == 1 + 2 * 33);
  CHECK(srows[0] == "epsilon,t,x1,alpha,u");

  const fs::path cell = write(dir, "c.yaml", "cell:\n  space: 16\n  time: 16\n");
  REQUIRE(cli({"cell", "--config", cell.string(), "--out", (dir / "c").string(), "--quiet"}).code == 0);
  const std::string ch = config_hash("cell", parse_config(slurp(cell), "cell"));
  const auto crows = lines(slurp(dir / "c" / ("cell_" + ch + ".csv")));
  CHECK(crows.size() == 1 + 16);
  CHECK(std::stod(split(crows[5])[3]) == 0.0);
}
