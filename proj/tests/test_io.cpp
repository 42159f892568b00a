#include "isoflow/analysis.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/invariants.hpp"
#include "isoflow/io.hpp"
#include "isoflow/rank2.hpp"
#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace isoflow;
using weyl::Family;
using weyl::RootSystem;
using weyl::RootSystemSpec;
using nlohmann::json;

namespace {

io::RunConfig config_for(const std::string& spec_text,
                         const std::string& variant = "euclidean") {
  io::RunConfig cfg;
  cfg.spec = io::parse_spec_json(spec_text);
  cfg.variant = variant;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("canonical spec round-trip") {
  auto canon = [](const std::string& text) {
    return io::canonical_spec_json(io::parse_spec_json(text));
  };
  CHECK(canon(R"({"family":"A","k":2,"m":1})") ==
        R"({"family":"A","k":2,"m":1})");
  CHECK(canon(R"({"k":3, "m2":2, "family":"B", "m1":1})") ==
        R"({"family":"B","k":3,"m1":1,"m2":2})");
  CHECK(canon(R"({"family":"I2","g":5,"m":2})") ==
        R"({"family":"I2","g":5,"m":2})");
  CHECK(canon(R"({"family":"I2","g":4,"m1":1,"m2":3})") ==
        R"({"family":"I2","g":4,"m1":1,"m2":3})");
  // Equal explicit classes canonicalize to the uniform form.
  CHECK(canon(R"({"family":"B","k":2,"m1":2,"m2":2})") ==
        R"({"family":"B","k":2,"m":2})");
  // Idempotent.
  CHECK(canon(canon(R"({"m":1,"family":"D","k":4})")) ==
        R"({"family":"D","k":4,"m":1})");
}

TEST_CASE("spec parsing rejects malformed input") {
  auto rejects = [](const std::string& text) {
    CHECK_THROWS_AS(io::parse_spec_json(text), ConfigError);
  };
  rejects("not json");
  rejects(R"([1,2,3])");
  rejects(R"({"family":"E","k":8,"m":1})");
  rejects(R"({"k":2,"m":1})");                              // no family
  rejects(R"({"family":"A","k":2})");                       // no multiplicity
  rejects(R"({"family":"A","k":2,"m":1,"extra":true})");    // unknown key
  rejects(R"({"family":"A","k":2,"m":1,"m1":1,"m2":1})");   // m and m1/m2
  rejects(R"({"family":"A","k":2,"m1":1})");                // m1 without m2
  rejects(R"({"family":"A","k":2,"m1":1,"m2":2})");         // A has one class
  rejects(R"({"family":"I2","g":5,"m1":1,"m2":2})");        // odd dihedral too
  rejects(R"({"family":"I2","k":2,"m":1})");                // I2 takes g
  rejects(R"({"family":"A","g":3,"m":1})");                 // A takes k
  rejects(R"({"family":"A","k":2.5,"m":1})");               // non-integer
  rejects(R"({"family":"A","k":2,"m":"one"})");
}

TEST_CASE("config echo is canonical and complete") {
  io::RunConfig cfg = config_for(R"({"family":"A","k":2,"m":1})");
  cfg.seed = 7;
  CHECK(io::config_echo(cfg) ==
        R"({"spec":{"family":"A","k":2,"m":1},"variant":"euclidean",)"
        R"("initial":"center","tol":1e-10,"seed":7})");
  cfg.variant = "focal";
  cfg.pinned = {0, 2};
  cfg.initial = "coords";
  cfg.coords = {-1.0, 0.0, 1.0};
  cfg.t_end = 0.25;
  const json j = json::parse(io::config_echo(cfg));
  CHECK(j["pinned"] == json({0, 2}));
  CHECK(j["coords"].size() == 3);
  CHECK(j["t_end"] == 0.25);
  CHECK(j["variant"] == "focal");
}

TEST_CASE("initial point resolution") {
  RootSystem rs(io::parse_spec_json(R"({"family":"I2","g":4,"m1":1,"m2":3})"));
  io::RunConfig cfg = config_for(R"({"family":"I2","g":4,"m1":1,"m2":3})");
  CHECK((io::resolve_initial(rs, cfg) - rs.chamber_center()).norm() == 0.0);

  cfg.initial = "minimal";
  const Vec mp = io::resolve_initial(rs, cfg);
  CHECK(std::abs(std::atan2(mp[1], mp[0]) - M_PI / 12) <= 1e-9);

  cfg.initial = "theta";
  cfg.theta = 0.3;
  const Vec xt = io::resolve_initial(rs, cfg);
  CHECK(xt[0] == std::cos(0.3));
  CHECK(xt[1] == std::sin(0.3));

  cfg.initial = "coords";
  cfg.coords = {0.5, 0.25};
  const Vec xc = io::resolve_initial(rs, cfg);
  CHECK(xc[0] == 0.5);
  cfg.coords = {0.5};
  CHECK_THROWS_AS(io::resolve_initial(rs, cfg), ConfigError);

  RootSystem a2(io::parse_spec_json(R"({"family":"A","k":2,"m":1})"));
  io::RunConfig tcfg = config_for(R"({"family":"A","k":2,"m":1})");
  tcfg.initial = "theta";
  tcfg.theta = 0.2;
  CHECK_THROWS_AS(io::resolve_initial(a2, tcfg), ConfigError);
  tcfg.initial = "nonsense";
  CHECK_THROWS_AS(io::resolve_initial(a2, tcfg), ConfigError);
}

TEST_CASE("trajectory csv shape") {
  RootSystem rs(io::parse_spec_json(R"({"family":"A","k":1,"m":1})"));
  io::RunConfig cfg = config_for(R"({"family":"A","k":1,"m":1})");
  cfg.initial = "coords";
  cfg.coords = {-0.5, 0.5};
  cfg.t_end = 0.01;
  flow::IntegrateOptions opt;
  opt.t_end = 0.01;
  const auto traj = flow::integrate(rs, io::resolve_initial(rs, cfg),
                                    flow::Variant::euclidean(), opt);
  const std::string csv = io::trajectory_csv(rs, traj, cfg);
  const auto lines = lines_of(csv);
  REQUIRE(lines.size() >= 4);
  CHECK(lines[0] == "# isoflow 0.1.0");
  CHECK(lines[1].rfind("# config {", 0) == 0);
  CHECK(lines[2] == "t,x1,x2,norm_sq,min_wall_gap,radial_residual");
  CHECK(lines.size() == 3 + traj.samples.size());
  CHECK(lines[3].rfind("0,-0.5,0.5,", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
}

TEST_CASE("collapse json carries the report and optional classification") {
  RootSystem rs(io::parse_spec_json(R"({"family":"B","k":2,"m":1})"));
  io::RunConfig cfg = config_for(R"({"family":"B","k":2,"m":1})");
  const auto traj =
      flow::integrate(rs, rs.chamber_center(), flow::Variant::euclidean());
  REQUIRE(traj.collapse.has_value());
  {
    const json j = json::parse(io::collapse_json(*traj.collapse, cfg));
    CHECK(j["version"] == io::kVersion);
    CHECK(j["config"]["spec"]["family"] == "B");
    CHECK(std::abs(j["report"]["T"].get<double>() - 0.125) <= 1e-4);
    CHECK(j["report"]["x_limit"].size() == 2);
    CHECK(j["report"]["active_walls"].size() == 4);  // full collapse at 0
    CHECK(j["report"]["fiber_dim"] == 4);
    CHECK(j["report"].contains("rate_estimate"));
    CHECK(j["report"].contains("typeI_estimate"));
    CHECK(j["report"]["top_stratum"] == false);
    CHECK(!j.contains("classification"));
  }
  {
    const auto cls = analysis::classify_singularity(rs, *traj.collapse);
    const json j = json::parse(io::collapse_json(*traj.collapse, cfg, &cls));
    CHECK(j["classification"]["fiber_type"] == "B2");
    CHECK(j["classification"]["type_one"] == false);
    CHECK(j["classification"].contains("rate_over_2m"));
  }
}

TEST_CASE("minimal json includes the sector angle in rank 2") {
  RootSystem rs(io::parse_spec_json(R"({"family":"I2","g":4,"m1":1,"m2":3})"));
  io::RunConfig cfg = config_for(R"({"family":"I2","g":4,"m1":1,"m2":3})");
  const auto mp = analysis::find_minimal_point(rs);
  const json j = json::parse(io::minimal_json(rs, mp, cfg));
  CHECK(j["minimal"]["x"].size() == 2);
  CHECK(std::abs(j["minimal"]["theta"].get<double>() - M_PI / 12) <= 1e-9);
  CHECK(j["minimal"]["residual"].get<double>() <= 1e-9);
  CHECK(j["minimal"]["n"] == 8);
}

TEST_CASE("exact trajectory json freezes rational coefficients") {
  RootSystem rs(io::parse_spec_json(R"({"family":"B","k":2,"m":1})"));
  io::RunConfig cfg = config_for(R"({"family":"B","k":2,"m":1})");
  cfg.initial = "coords";
  cfg.coords = {-0.75, -0.5};
  Vec x0(2);
  x0 << -0.75, -0.5;
  {
    const auto itraj = invariants::exact_trajectory(rs, x0, false);
    const json j = json::parse(io::invariant_trajectory_json(itraj, cfg));
    const auto& coords = j["exact"]["coordinates"];
    REQUIRE(coords.size() == 2);
    CHECK(j["exact"]["spherical"] == false);
    CHECK(j["exact"]["n"] == 4);
    CHECK(coords[0]["name"] == "zeta1");
    CHECK(coords[0]["s"] == 2);
    CHECK(coords[0]["coeffs"] == json({"13/16", "-8"}));
    CHECK(coords[1]["name"] == "zeta2");
    CHECK(coords[1]["coeffs"] == json({"9/64", "-13/8", "8"}));
  }
  {
    // Spherical solutions list the leading coefficient and the forced part.
    RootSystem b3(io::parse_spec_json(R"({"family":"B","k":3,"m1":1,"m2":2})"));
    io::RunConfig c3 = config_for(R"({"family":"B","k":3,"m1":1,"m2":2})", "spherical");
    Rng rng(83);
    const auto itraj =
        invariants::exact_trajectory(b3, b3.random_interior_unit(rng), true);
    const json j = json::parse(io::invariant_trajectory_json(itraj, c3));
    const auto& coords = j["exact"]["coordinates"];
    REQUIRE(coords.size() == 3);
    CHECK(j["exact"]["spherical"] == true);
    for (const auto& c : coords) {
      CHECK(c.contains("c1"));
      CHECK(c.contains("h"));
    }
    REQUIRE(coords[2].contains("h_exp"));
    CHECK(coords[2]["h_exp"].size() >= 1);
    CHECK(coords[2]["h_exp"][0].contains("q"));
    CHECK(coords[2]["h_exp"][0].contains("coeffs"));
  }
}

TEST_CASE("exact collapse json") {
  RootSystem rs(io::parse_spec_json(R"({"family":"B","k":2,"m":1})"));
  io::RunConfig cfg = config_for(R"({"family":"B","k":2,"m":1})");
  const auto ec = invariants::exact_collapse_time(rs, rs.chamber_center());
  const json j = json::parse(io::exact_collapse_json(rs, ec, cfg));
  CHECK(std::abs(j["exact_collapse"]["T"].get<double>() - 0.125) <= 1e-9);
  CHECK(std::abs(j["exact_collapse"]["radial_bound"].get<double>() - 0.125) <=
        1e-12);
  CHECK(j["exact_collapse"]["vanishing"].size() == 4);
  CHECK(j["exact_collapse"]["fiber_type"] == "B2");
  CHECK(j["exact_collapse"]["x_limit"].size() == 2);
}

TEST_CASE("exact points csv recovers the start in the first row") {
  RootSystem rs(io::parse_spec_json(R"({"family":"B","k":2,"m":1})"));
  io::RunConfig cfg = config_for(R"({"family":"B","k":2,"m":1})");
  const Vec x0 = rs.chamber_center();
  const auto itraj = invariants::exact_trajectory(rs, x0, false);
  const std::string csv = io::exact_points_csv(rs, itraj, 0.12, 5, cfg);
  const auto lines = lines_of(csv);
  REQUIRE(lines.size() >= 4);
  CHECK(lines[2] == "t,x1,x2,norm_sq,min_wall_gap,radial_residual");
  CHECK(lines.size() <= 3 + 6);
  std::istringstream row(lines[3]);
  std::string field;
  std::getline(row, field, ',');
  CHECK(field == "0");
  std::getline(row, field, ',');
  CHECK(std::abs(std::stod(field) - x0[0]) <= 1e-12);
  CHECK_THROWS_AS(io::exact_points_csv(rs, itraj, 0.12, 0, cfg), ConfigError);
}

TEST_CASE("portrait outputs are deterministic svg/csv documents") {
  {
    RootSystem rs(io::parse_spec_json(R"({"family":"I2","g":4,"m1":1,"m2":2})"));
    io::RunConfig cfg = config_for(R"({"family":"I2","g":4,"m1":1,"m2":2})", "spherical");
    const auto pp = rank2::spherical_phase_portrait(rs, 7);
    const std::string csv = io::rank2_portrait_csv(pp, cfg);
    const auto lines = lines_of(csv);
    CHECK(lines[2] == "orbit,theta0,limit_wall,T,t,theta");
    CHECK(lines.size() == 3 + 7 * 65);  // 64 steps + endpoint per orbit
    const std::string svg = io::rank2_portrait_svg(pp, cfg);
    CHECK(svg.rfind("<svg ", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    size_t cnt = 0;
    for (size_t at = svg.find("<polyline"); at != std::string::npos;
         at = svg.find("<polyline", at + 1))
      ++cnt;
    CHECK(cnt == 7);
    CHECK(io::rank2_portrait_svg(pp, cfg) == svg);
  }
  {
    RootSystem rs(io::parse_spec_json(R"({"family":"A","k":3,"m":1})"));
    io::RunConfig cfg = config_for(R"({"family":"A","k":3,"m":1})", "spherical");
    const auto p = analysis::a3_portrait(rs, 12, 5);
    const std::string csv = io::a3_portrait_csv(p, cfg);
    const auto lines = lines_of(csv);
    CHECK(lines[2] ==
          "start,x1,x2,x3,x4,u,v,region,predicted_wall,observed_wall,match,T");
    CHECK(lines.size() == 3 + 12);
    const std::string svg = io::a3_portrait_svg(p, cfg);
    CHECK(svg.find("match fraction") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
}

TEST_CASE("atomic text writes") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "isoflow_io_test" / "nested";
  fs::remove_all(dir.parent_path());
  const fs::path file = dir / "out.txt";
  io::write_text_atomic(file.string(), "payload\n");
  std::ifstream in(file);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "payload\n");
  CHECK(!fs::exists(file.string() + ".tmp"));
  io::write_text_atomic(file.string(), "replaced");
  std::ifstream in2(file);
  std::string content2((std::istreambuf_iterator<char>(in2)),
                       std::istreambuf_iterator<char>());
  CHECK(content2 == "replaced");
  fs::remove_all(dir.parent_path());
}

}  // TEST_SUITE
