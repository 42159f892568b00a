#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCli = ISOFLOW_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, bool merge_stderr = false,
              const std::string& env_prefix = "") {
  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += ' ';
  cmd += kCli;
  cmd += ' ';
  cmd += args;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("isoflow_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("flow: dihedral collapse with files and frozen collapse time") {
  const fs::path dir = scratch("flow");
  const auto res = run("flow --family I2 --g 3 --m 1 "
                       "--theta 0.2617993877991494 --out-dir " + dir.string());
  REQUIRE(res.exit_code == 0);
  const json s = json::parse(res.out);
  CHECK(s["command"] == "flow");
  CHECK(s["system"] == "I2(3)");
  CHECK(s["stop"] == "collapse");
  // theta0 = pi/12: T = (1 - 2^{-1/3})/6.
  const double expect = (1.0 - std::pow(2.0, -1.0 / 3.0)) / 6.0;
  CHECK(std::abs(s["T"].get<double>() - expect) <= 2e-6);

  REQUIRE(fs::exists(dir / "trajectory.csv"));
  REQUIRE(fs::exists(dir / "collapse.json"));
  const auto lines = split(slurp(dir / "trajectory.csv"), '\n');
  REQUIRE(lines.size() > 4);
  CHECK(lines[0] == "# isoflow 0.1.0");
  CHECK(lines[1].rfind("# config ", 0) == 0);
  CHECK(lines[2] == "t,x1,x2,norm_sq,min_wall_gap,radial_residual");
  const auto last = split(lines.back(), ',');
  REQUIRE(last.size() == 6);
  const double final_gap = std::stod(last[4]);
  CHECK(final_gap > 0.0);
  CHECK(final_gap < 1e-3);

  const json rep = json::parse(slurp(dir / "collapse.json"));
  CHECK(rep["report"]["active_walls"] == json({0}));
  CHECK(rep["config"]["spec"]["g"] == 3);
}

TEST_CASE("flow: outputs are byte-identical across reruns") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "flow --family B --k 2 --m 1 --seed 11 --out-dir ";
  REQUIRE(run(args + a.string()).exit_code == 0);
  REQUIRE(run(args + b.string()).exit_code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "collapse.json") == slurp(b / "collapse.json"));
}

TEST_CASE("flow: finite horizon stops without collapse outputs") {
  const fs::path dir = scratch("horizon");
  const auto res = run("flow --family I2 --g 3 --m 1 --theta 0.2 "
                       "--t-end 0.01 --out-dir " + dir.string());
  REQUIRE(res.exit_code == 0);
  const json s = json::parse(res.out);
  CHECK(s["stop"] == "t-end");
  CHECK(!s.contains("T"));
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(!fs::exists(dir / "collapse.json"));
}

TEST_CASE("exact: frozen rational coefficients and recovered points") {
  const fs::path dir = scratch("exact");
  const auto res = run("exact --family B --k 2 --m 1 --initial=-0.75,-0.5 "
                       "--out-dir " + dir.string());
  REQUIRE(res.exit_code == 0);
  const json s = json::parse(res.out);
  CHECK(s.contains("T"));
  REQUIRE(fs::exists(dir / "exact.json"));
  REQUIRE(fs::exists(dir / "exact_collapse.json"));
  REQUIRE(fs::exists(dir / "exact_points.csv"));
  const json e = json::parse(slurp(dir / "exact.json"));
  CHECK(e["exact"]["coordinates"][0]["coeffs"] == json({"13/16", "-8"}));
  CHECK(e["exact"]["coordinates"][1]["coeffs"] ==
        json({"9/64", "-13/8", "8"}));
}

TEST_CASE("exact: reads the spec from a file") {
  const fs::path dir = scratch("spec_file");
  fs::create_directories(dir);
  const fs::path spec = dir / "spec.json";
  {
    std::ofstream out(spec);
    out << R"({"family":"B","k":2,"m":1})";
  }
  const auto res = run("exact --spec @" + spec.string() +
                       " --initial=-0.75,-0.5 --out-dir " + dir.string());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "exact.json"));
}

TEST_CASE("collapse: report with classification on stdout") {
  const auto res = run("collapse --family B --k 2 --m 1");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.out);
  CHECK(std::abs(j["report"]["T"].get<double>() - 0.125) <= 1e-4);
  CHECK(j["report"]["fiber_dim"] == 4);
  CHECK(j["classification"]["fiber_type"] == "B2");
  CHECK(j["classification"]["type_one"] == false);
}

TEST_CASE("minimal: dihedral angle to solver precision") {
  const auto res = run("minimal --family I2 --g 4 --m1 1 --m2 3");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.out);
  CHECK(std::abs(j["minimal"]["theta"].get<double>() - M_PI / 12) <= 1e-9);
  CHECK(j["minimal"]["residual"].get<double>() <= 1e-9);
}

TEST_CASE("portrait: dihedral orbits and A(3) strata") {
  {
    const fs::path dir = scratch("portrait_i2");
    const auto res =
        run("portrait --family I2 --g 6 --m 1 --out-dir " + dir.string());
    REQUIRE(res.exit_code == 0);
    const json s = json::parse(res.out);
    CHECK(s["orbits"] == 9);
    CHECK(std::abs(s["theta_min"].get<double>() - M_PI / 12) <= 1e-12);
    CHECK(fs::exists(dir / "portrait.csv"));
    const std::string svg = slurp(dir / "portrait.svg");
    CHECK(svg.find("</svg>") != std::string::npos);
  }
  {
    const fs::path a = scratch("portrait_a3_t1");
    const fs::path b = scratch("portrait_a3_t3");
    const std::string args =
        "portrait --family A --k 3 --m 1 --starts 40 --seed 5 --out-dir ";
    const auto r1 = run(args + a.string(), false, "ISOFLOW_THREADS=1");
    REQUIRE(r1.exit_code == 0);
    const json s = json::parse(r1.out);
    CHECK(s["starts"] == 40);
    CHECK(s["match_fraction"].get<double>() >= 0.9);
    // The thread budget must not affect the output bytes.
    const auto r3 = run(args + b.string(), false, "ISOFLOW_THREADS=3");
    REQUIRE(r3.exit_code == 0);
    CHECK(slurp(a / "portrait.csv") == slurp(b / "portrait.csv"));
    CHECK(slurp(a / "portrait.svg") == slurp(b / "portrait.svg"));
  }
}

TEST_CASE("verify: single-family run passes") {
  const auto res = run("verify --family A --k 2 --m 1 --seed 1");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("radial-identity") != std::string::npos);
  CHECK(res.out.find("checks passed") != std::string::npos);
  CHECK(res.out.find("FAILED") == std::string::npos);
}

TEST_CASE("usage and config errors exit with code 1 and write nothing") {
  const fs::path dir = scratch("errors");
  auto fails_1 = [&](const std::string& args) {
    const auto res = run(args + " --out-dir " + dir.string(), true);
    CAPTURE(args);
    CHECK(res.exit_code == 1);
  };
  fails_1("");  // no subcommand
  fails_1("flow --k 2 --m 1");
  fails_1("flow --family E --k 8 --m 1");
  fails_1("flow --family B --k 2 --m1 1");
  fails_1("flow --spec '{\"family\":\"A\",\"k\":2,\"m\":1,\"zz\":1}'");
  fails_1("flow --spec '{\"family\":\"A\",\"k\":2,\"m\":1}' --family A --k 2 --m 1");
  fails_1("flow --family A --k 2 --m 1 --variant focal");  // missing --pinned
  fails_1("flow --family A --k 2 --m 1 --variant warp");
  fails_1("flow --family A --k 2 --m 1 --no-such-flag");
  fails_1("flow --family A --k 2 --m 1 --theta 0.2");  // theta needs I2
  fails_1("portrait --family B --k 3 --m 1");
  fails_1("exact --family A --k 2 --m 1 --variant focal --pinned 0");
  CHECK(!fs::exists(dir));  // every failure happened before any write

  const auto res = run("flow --family B --k 2 --m1 1", true);
  CHECK(res.out.find("config error:") != std::string::npos);
}

TEST_CASE("runtime failures exit with code 2") {
  {
    // Stationary spherical start cannot collapse before the horizon.
    const auto res = run("collapse --family I2 --g 3 --m 1 "
                         "--variant spherical --initial minimal --t-end 0.5",
                         true);
    CHECK(res.exit_code == 2);
    CHECK(res.out.find("error:") != std::string::npos);
    CHECK(res.out.find("no collapse") != std::string::npos);
  }
  {
    // A start outside the open chamber is rejected by the integrator.
    const auto res = run("flow --family A --k 2 --m 1 --initial=1,0,-1", true);
    CHECK(res.exit_code == 2);
  }
}

}  // TEST_SUITE
