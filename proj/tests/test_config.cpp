#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fsl/cli.hpp"
#include "fsl/config.hpp"

using namespace fsl;
namespace fs = std::filesystem;

namespace {

const char* kEdge = R"(alpha = 0.5
T = 1
nt = 4
[edge.1]
a = 0
b = 1
m_cells = 4
beta = const:2
q = 1
)";

const char* kGraph = R"(alpha = 0.7
T = 0.5
nt = 4
n = 3
m_split = 2
[edge.1]
a = 0
b = 1
m_cells = 4
[edge.2]
a = 0
b = 0.5
m_cells = 4
ydtarget = const:1
[edge.3]
a = 0
b = 2
m_cells = 6
y0 = const:0.1
[channel.2]
kind = dirichlet
uad = box:-1:1
weight = 0.5
[channel.3]
kind = neumann
value = const:0.25
)";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("fsl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::vector<std::string> issues_of(const fs::path& file) {
  try {
    parse_config(file);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& s : issues)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fslctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("minimal single-edge file") {
  TempDir dir;
  const RunConfig cfg = parse_config(dir.write("p.ini", kEdge));
  CHECK_FALSE(cfg.graph);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.time.steps() == 4);
  REQUIRE(cfg.edges.size() == 1);
  CHECK(cfg.edges[0].coeffs.beta == Vec::Constant(5, 2.0));
  CHECK(cfg.edges[0].coeffs.q == Vec::Constant(5, 1.0));
  CHECK(cfg.channels.size() == 1);
  CHECK(cfg.control_values().rows() == 5);
  CHECK(cfg.edge_problem().tikhonov == 1.0);
}

TEST_CASE("negative beta is rejected") {
  TempDir dir;
  std::string text = kEdge;
  text.replace(text.find("const:2"), 7, "const:-1");
  const auto issues = issues_of(dir.write("p.ini", text));
  REQUIRE_FALSE(issues.empty());
  CHECK(mentions(issues, "positivity"));
  CHECK(mentions(issues, "beta"));
}

TEST_CASE("split index 1 is rejected on a graph") {
  TempDir dir;
  std::string text = kGraph;
  text.replace(text.find("m_split = 2"), 11, "m_split = 1");
  CHECK(mentions(issues_of(dir.write("g.ini", text)), "m_split"));
}

TEST_CASE("every violation is reported") {
  TempDir dir;
  const auto issues = issues_of(dir.write("p.ini", R"(alpha = 1.5
T = 1
nt = 0
colour = red
[edge.1]
a = 0
b = 1
m_cells = 4
q = const:-3
)"));
  CHECK(issues.size() >= 4);
  CHECK(mentions(issues, "alpha"));
  CHECK(mentions(issues, "nt"));
  CHECK(mentions(issues, "colour"));
  CHECK(mentions(issues, "q"));
}

TEST_CASE("missing required keys") {
  TempDir dir;
  const auto issues = issues_of(dir.write("p.ini", "alpha = 0.5\n"));
  CHECK(mentions(issues, "T"));
  CHECK(mentions(issues, "nt"));
  CHECK(mentions(issues, "edge.1"));
}

TEST_CASE("graph file") {
  TempDir dir;
  const RunConfig cfg = parse_config(dir.write("g.ini", kGraph));
  CHECK(cfg.graph);
  CHECK(cfg.m_split == 2);
  REQUIRE(cfg.channels.size() == 2);
  CHECK(cfg.channels[0].dirichlet);
  CHECK_FALSE(cfg.channels[1].dirichlet);
  CHECK(cfg.channels[0].weight == 0.5);
  CHECK(cfg.channels[0].admissible.bounded());
  const Mat u = cfg.control_values();
  CHECK(u.rows() == 5);
  CHECK(u.cols() == 2);
  CHECK(u(3, 1) == 0.25);
  const StarGraphProblem pb = cfg.graph_problem();
  CHECK(pb.edges() == 3);
  CHECK_NOTHROW(pb.validate());
}

TEST_CASE("channel kind must match the split") {
  TempDir dir;
  std::string text = kGraph;
  text.replace(text.find("kind = neumann"), 14, "kind = dirichlet");
  CHECK(mentions(issues_of(dir.write("g.ini", text)), "channel.3.kind"));
}

TEST_CASE("data files are read relative to the problem file") {
  TempDir dir;
  dir.write("y0.csv", "y0\n0\n0.1\n0.2\n0.3\n0.4\n");
  std::string text = kEdge;
  text += "y0 = file:y0.csv\n";
  const RunConfig cfg = parse_config(dir.write("p.ini", text));
  CHECK(cfg.edges[0].y0[4] == doctest::Approx(0.4));

  dir.write("bad.csv", "1\n2\n");
  text = kEdge;
  text += "y0 = file:bad.csv\n";
  CHECK(mentions(issues_of(dir.write("q.ini", text)), "y0"));
  text = kEdge;
  text += "y0 = file:missing.csv\n";
  CHECK_FALSE(issues_of(dir.write("r.ini", text)).empty());
}

TEST_CASE("csv reader") {
  TempDir dir;
  const Mat m = read_csv_matrix(dir.write("m.csv", "# comment\nx,y\n1, 2\n3 4\n\n5,6\n"));
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(m(2, 1) == 6.0);
}

TEST_CASE("command line: forward solve writes the artifacts") {
  TempDir dir;
  const fs::path file = dir.write("p.ini", kEdge);
  const CliRun r = cli({"solve-forward", file.string(), "-o", (dir.path / "out").string()});
  CHECK(r.code == kExitOk);
  for (const char* name : {"state.csv", "controls.csv", "report.txt"}) CHECK(fs::exists(dir.path / "out" / name));
  const std::string state = slurp(dir.path / "out" / "state.csv");
  CHECK(state.rfind("t,edge,x,y\n", 0) == 0);
  CHECK(slurp(dir.path / "out" / "controls.csv").rfind("t,channel,value\n", 0) == 0);
}

TEST_CASE("command line: optimize and adjoint") {
  TempDir dir;
  const fs::path file = dir.write("g.ini", kGraph);
  CliRun r = cli({"optimize", file.string(), "--out", (dir.path / "opt").string()});
  CHECK(r.code == kExitOk);
  const std::string conv = slurp(dir.path / "opt" / "convergence.csv");
  CHECK(conv.rfind("iter,cost,stationarity\n", 0) == 0);
  CHECK(slurp(dir.path / "opt" / "report.txt").find("stationarity") != std::string::npos);

  r = cli({"solve-adjoint", file.string(), "-o", (dir.path / "adj").string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir.path / "adj" / "adjoint.csv"));
}

TEST_CASE("command line: floats carry 17 significant digits") {
  TempDir dir;
  std::string text = kEdge;
  text += "y0 = const:0.1\n";
  const fs::path file = dir.write("p.ini", text);
  REQUIRE(cli({"solve-forward", file.string(), "-o", dir.path.string()}).code == kExitOk);
  CHECK(slurp(dir.path / "state.csv").find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("command line: validate") {
  TempDir dir;
  const CliRun r = cli({"validate", dir.write("g.ini", kGraph).string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("command line: exit codes for bad input") {
  TempDir dir;
  std::string text = kGraph;
  text.replace(text.find("m_split = 2"), 11, "m_split = 1");
  CliRun r = cli({"solve-forward", dir.write("g.ini", text).string(), "-o", dir.path.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("m_split") != std::string::npos);

  CHECK(cli({"solve-forward", (dir.path / "nope.ini").string()}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
  CHECK(cli({}).code == kExitConfig);
}
