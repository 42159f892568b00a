// Command-line front end: integrates the singular chamber flow, evaluates the
// exact invariant-coordinate solution, reports collapse data, finds minimal
// directions, draws phase portraits, and runs the property suites.
#include "verify_suites.hpp"

#include "isoflow/analysis.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/invariants.hpp"
#include "isoflow/io.hpp"
#include "isoflow/rank2.hpp"
#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using isoflow::ConfigError;
using isoflow::Vec;
using ordered_json = nlohmann::ordered_json;
namespace io = isoflow::io;
namespace weyl = isoflow::weyl;
namespace flow = isoflow::flow;
namespace invariants = isoflow::invariants;
namespace rank2 = isoflow::rank2;
namespace analysis = isoflow::analysis;

struct Options {
  CLI::App* cmd = nullptr;

  std::string spec_text;  // inline JSON or @path
  std::string family;
  int k = 0;
  int g = 0;
  int m = 1, m1 = 1, m2 = 1;

  std::string variant = "euclidean";
  std::vector<int> pinned;
  double theta = 0.0;
  std::string initial = "center";
  double tol = 1e-10;
  double t_end = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  int samples = 129;  // exact: recovered-point sample count
  int starts = 0;     // portrait: orbit/start count (0 = per-family default)
};

void add_common(CLI::App* cmd, Options& o) {
  o.cmd = cmd;
  cmd->add_option("--spec", o.spec_text,
                  "root-system spec as inline JSON or @file");
  cmd->add_option("--family", o.family, "family: A, B, D, or I2");
  cmd->add_option("--k", o.k, "rank (A/B/D families)");
  cmd->add_option("--g", o.g, "dihedral order (I2 family)");
  cmd->add_option("--m", o.m, "uniform multiplicity");
  cmd->add_option("--m1", o.m1, "first multiplicity class (B, even-g I2)");
  cmd->add_option("--m2", o.m2, "second multiplicity class (B, even-g I2)");
  cmd->add_option("--variant", o.variant,
                  "flow variant: euclidean, spherical, or focal")
      ->capture_default_str();
  cmd->add_option("--pinned", o.pinned,
                  "focal variant: comma-separated pinned wall indices")
      ->delimiter(',');
  cmd->add_option("--theta", o.theta,
                  "initial angle in (0, pi/g) for rank-2 systems");
  cmd->add_option("--initial", o.initial,
                  "initial point: center, minimal, or comma-separated "
                  "coordinates")
      ->capture_default_str();
  cmd->add_option("--tol", o.tol, "integration tolerance")
      ->capture_default_str();
  cmd->add_option("--t-end", o.t_end, "integration horizon (default: run to "
                                      "collapse; spherical runs cap at 50/n)");
  cmd->add_option("--seed", o.seed, "seed for randomized subcommands")
      ->capture_default_str();
  cmd->add_option("--out-dir", o.out_dir, "output directory")
      ->capture_default_str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read spec file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool family_flags_used(const Options& o) {
  return o.cmd->count("--family") || o.cmd->count("--k") ||
         o.cmd->count("--g") || o.cmd->count("--m") || o.cmd->count("--m1") ||
         o.cmd->count("--m2");
}

weyl::RootSystemSpec build_spec(const Options& o) {
  if (o.cmd->count("--spec")) {
    if (family_flags_used(o))
      throw ConfigError(
          "give either --spec or the --family/--k/--g/--m flags, not both");
    std::string text = o.spec_text;
    if (!text.empty() && text.front() == '@') text = slurp(text.substr(1));
    return io::parse_spec_json(text);
  }
  if (!o.cmd->count("--family"))
    throw ConfigError("missing --family (or --spec)");
  ordered_json j;
  j["family"] = o.family;
  if (o.cmd->count("--k")) j["k"] = o.k;
  if (o.cmd->count("--g")) j["g"] = o.g;
  if (o.cmd->count("--m")) j["m"] = o.m;
  if (o.cmd->count("--m1")) j["m1"] = o.m1;
  if (o.cmd->count("--m2")) j["m2"] = o.m2;
  return io::parse_spec_json(j.dump());
}

io::RunConfig build_config(const Options& o, const weyl::RootSystemSpec& spec) {
  io::RunConfig cfg;
  cfg.spec = spec;
  cfg.variant = o.variant;
  cfg.pinned = o.pinned;
  cfg.tol = o.tol;
  cfg.t_end = o.t_end;
  cfg.seed = o.seed;
  if (cfg.variant != "euclidean" && cfg.variant != "spherical" &&
      cfg.variant != "focal")
    throw ConfigError("unknown variant '" + cfg.variant +
                      "' (euclidean | spherical | focal)");
  if (cfg.variant != "focal" && !cfg.pinned.empty())
    throw ConfigError("--pinned applies to the focal variant only");
  if (o.cmd->count("--theta")) {
    if (o.cmd->count("--initial"))
      throw ConfigError("give either --theta or --initial, not both");
    cfg.initial = "theta";
    cfg.theta = o.theta;
  } else if (o.cmd->count("--initial")) {
    if (o.initial == "center" || o.initial == "minimal") {
      cfg.initial = o.initial;
    } else {
      cfg.initial = "coords";
      std::stringstream ss(o.initial);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          size_t used = 0;
          const double v = std::stod(item, &used);
          while (used < item.size() && std::isspace(item[used])) ++used;
          if (used != item.size()) throw std::invalid_argument(item);
          cfg.coords.push_back(v);
        } catch (const std::exception&) {
          throw ConfigError("--initial wants center, minimal, or numbers: '" +
                            item + "'");
        }
      }
      if (cfg.coords.empty())
        throw ConfigError("--initial coordinate list is empty");
    }
  }
  return cfg;
}

flow::Variant build_variant(const io::RunConfig& cfg) {
  if (cfg.variant == "euclidean") return flow::Variant::euclidean();
  if (cfg.variant == "spherical") return flow::Variant::spherical();
  if (cfg.pinned.empty())
    throw ConfigError("focal variant needs --pinned wall indices");
  return flow::Variant::focal(cfg.pinned);
}

// Spherical flows from non-generic starts never collapse; cap the horizon so
// such runs terminate.
void cap_spherical_horizon(io::RunConfig& cfg, const weyl::RootSystem& rs) {
  if (cfg.variant == "spherical" && !std::isfinite(cfg.t_end))
    cfg.t_end = 50.0 / rs.n();
}

void write_outputs(const std::string& out_dir,
                   const std::vector<std::pair<std::string, std::string>>& files,
                   ordered_json& summary) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& [name, content] : files) {
    const std::string path = out_dir + "/" + name;
    io::write_text_atomic(path, content);
    written.push_back(path);
  }
  summary["files"] = written;
}

int cmd_flow(const Options& o) {
  const auto spec = build_spec(o);
  const weyl::RootSystem rs(spec);
  auto cfg = build_config(o, spec);
  cap_spherical_horizon(cfg, rs);
  const Vec x0 = io::resolve_initial(rs, cfg);
  flow::IntegrateOptions opt;
  opt.tol = cfg.tol;
  opt.t_end = cfg.t_end;
  const auto traj = flow::integrate(rs, x0, build_variant(cfg), opt);

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("trajectory.csv", io::trajectory_csv(rs, traj, cfg));
  if (traj.collapse)
    files.emplace_back("collapse.json", io::collapse_json(*traj.collapse, cfg));

  ordered_json s;
  s["command"] = "flow";
  s["system"] = rs.name();
  s["stop"] = traj.stop == flow::StopReason::Collapse ? "collapse" : "t-end";
  s["t_final"] = traj.t_back();
  s["samples"] = traj.samples.size();
  if (traj.collapse) {
    s["T"] = traj.collapse->T;
    s["active_walls"] = traj.collapse->active_walls;
    s["fiber_dim"] = traj.collapse->fiber_dim;
  }
  write_outputs(o.out_dir, files, s);
  std::cout << s.dump(2) << "\n";
  return 0;
}

int cmd_exact(const Options& o) {
  const auto spec = build_spec(o);
  const weyl::RootSystem rs(spec);
  const auto cfg = build_config(o, spec);
  if (cfg.variant == "focal")
    throw ConfigError(
        "exact invariant coordinates cover the euclidean and spherical flows");
  const bool spherical = cfg.variant == "spherical";
  const Vec x0 = io::resolve_initial(rs, cfg);
  const auto itraj = invariants::exact_trajectory(rs, x0, spherical);

  ordered_json s;
  s["command"] = "exact";
  s["system"] = rs.name();
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("exact.json", io::invariant_trajectory_json(itraj, cfg));

  double t_hi;
  if (spherical) {
    t_hi = std::isfinite(cfg.t_end) ? cfg.t_end : 2.0 / rs.n();
  } else {
    const auto ec = invariants::exact_collapse_time(rs, x0);
    files.emplace_back("exact_collapse.json",
                       io::exact_collapse_json(rs, ec, cfg));
    t_hi = 0.995 * ec.T;
    if (std::isfinite(cfg.t_end)) t_hi = std::min(t_hi, cfg.t_end);
    s["T"] = ec.T;
    s["radial_bound"] = ec.radial_bound;
  }
  files.emplace_back("exact_points.csv",
                     io::exact_points_csv(rs, itraj, t_hi, o.samples, cfg));
  write_outputs(o.out_dir, files, s);
  std::cout << s.dump(2) << "\n";
  return 0;
}

int cmd_collapse(const Options& o) {
  const auto spec = build_spec(o);
  const weyl::RootSystem rs(spec);
  auto cfg = build_config(o, spec);
  cap_spherical_horizon(cfg, rs);
  const Vec x0 = io::resolve_initial(rs, cfg);
  flow::IntegrateOptions opt;
  opt.tol = cfg.tol;
  opt.t_end = cfg.t_end;
  const auto traj = flow::integrate(rs, x0, build_variant(cfg), opt);
  if (!traj.collapse)
    throw isoflow::NotCollapsedError(rs.name() +
                                     ": no collapse before the horizon");
  const auto cls = analysis::classify_singularity(rs, *traj.collapse);
  std::cout << io::collapse_json(*traj.collapse, cfg, &cls);
  return 0;
}

int cmd_minimal(const Options& o) {
  const auto spec = build_spec(o);
  const weyl::RootSystem rs(spec);
  const auto cfg = build_config(o, spec);
  const double tol = o.cmd->count("--tol") ? o.tol : 1e-12;
  const auto mp = analysis::find_minimal_point(rs, nullptr, tol);
  std::cout << io::minimal_json(rs, mp, cfg);
  return 0;
}

int cmd_portrait(const Options& o) {
  const auto spec = build_spec(o);
  const weyl::RootSystem rs(spec);
  const auto cfg = build_config(o, spec);
  ordered_json s;
  s["command"] = "portrait";
  s["system"] = rs.name();
  std::vector<std::pair<std::string, std::string>> files;
  if (spec.family == weyl::Family::I2) {
    const int orbits = o.starts > 0 ? o.starts : 9;
    const auto pp = rank2::spherical_phase_portrait(rs, orbits);
    files.emplace_back("portrait.csv", io::rank2_portrait_csv(pp, cfg));
    files.emplace_back("portrait.svg", io::rank2_portrait_svg(pp, cfg));
    s["theta_min"] = pp.theta_min;
    s["orbits"] = pp.orbits.size();
  } else if (spec.family == weyl::Family::A && spec.k == 3) {
    const int starts = o.starts > 0 ? o.starts : 300;
    const auto p = analysis::a3_portrait(rs, starts, cfg.seed);
    files.emplace_back("portrait.csv", io::a3_portrait_csv(p, cfg));
    files.emplace_back("portrait.svg", io::a3_portrait_svg(p, cfg));
    s["match_fraction"] = p.match_fraction;
    s["starts"] = p.starts.size();
  } else {
    throw ConfigError("portraits cover the I2(g) and A(3) systems");
  }
  write_outputs(o.out_dir, files, s);
  std::cout << s.dump(2) << "\n";
  return 0;
}

int cmd_verify(const Options& o) {
  std::optional<weyl::RootSystemSpec> spec;
  if (o.cmd->count("--spec") || family_flags_used(o)) spec = build_spec(o);
  const auto checks = isoflow::cli::run_verify_suites(spec, o.seed);
  size_t name_w = 4, subject_w = 6;
  for (const auto& c : checks) {
    name_w = std::max(name_w, c.name.size());
    subject_w = std::max(subject_w, c.subject.size());
  }
  int failed = 0;
  for (const auto& c : checks) {
    if (!c.pass) ++failed;
    std::cout << (c.pass ? "ok      " : "FAILED  ") << c.name
              << std::string(name_w - c.name.size() + 2, ' ') << c.subject
              << std::string(subject_w - c.subject.size() + 2, ' ') << c.detail
              << "\n";
  }
  if (failed == 0) {
    std::cout << "all " << checks.size() << " checks passed\n";
    return 0;
  }
  std::cout << failed << " of " << checks.size() << " checks failed\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singular mean curvature flow in a Weyl chamber"};
  app.require_subcommand(1);

  Options flow_o, exact_o, collapse_o, minimal_o, portrait_o, verify_o;
  auto* c_flow = app.add_subcommand(
      "flow", "integrate the flow; writes trajectory.csv (+ collapse.json)");
  add_common(c_flow, flow_o);
  auto* c_exact = app.add_subcommand(
      "exact", "exact invariant-coordinate solution; writes exact.json, "
               "exact_points.csv (+ exact_collapse.json)");
  add_common(c_exact, exact_o);
  c_exact->add_option("--samples", exact_o.samples,
                      "recovered-point sample count")
      ->capture_default_str();
  auto* c_collapse = app.add_subcommand(
      "collapse", "integrate to collapse and print the report as JSON");
  add_common(c_collapse, collapse_o);
  auto* c_minimal = app.add_subcommand(
      "minimal", "solve for the minimal direction and print it as JSON");
  add_common(c_minimal, minimal_o);
  auto* c_portrait = app.add_subcommand(
      "portrait", "phase portrait (I2 spherical orbits or the A(3) strata); "
                  "writes portrait.csv and portrait.svg");
  add_common(c_portrait, portrait_o);
  c_portrait->add_option("--starts", portrait_o.starts,
                         "orbit count (I2) or start count (A3)");
  auto* c_verify = app.add_subcommand(
      "verify", "run the property suites (pass/fail table; exit 0 iff all "
                "pass); no spec runs the default battery");
  add_common(c_verify, verify_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_flow->parsed()) return cmd_flow(flow_o);
    if (c_exact->parsed()) return cmd_exact(exact_o);
    if (c_collapse->parsed()) return cmd_collapse(collapse_o);
    if (c_minimal->parsed()) return cmd_minimal(minimal_o);
    if (c_portrait->parsed()) return cmd_portrait(portrait_o);
    if (c_verify->parsed()) return cmd_verify(verify_o);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
