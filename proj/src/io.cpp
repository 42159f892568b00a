#include "isoflow/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

namespace isoflow::io {

namespace {

using nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<double> to_vector(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

ordered_json spec_json(const weyl::RootSystemSpec& sp) {
  ordered_json j;
  j["family"] = weyl::family_to_string(sp.family);
  if (sp.family == weyl::Family::I2)
    j["g"] = sp.g;
  else
    j["k"] = sp.k;
  if (sp.uniform) {
    j["m"] = sp.m1;
  } else {
    j["m1"] = sp.m1;
    j["m2"] = sp.m2;
  }
  return j;
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["spec"] = spec_json(cfg.spec);
  j["variant"] = cfg.variant;
  if (!cfg.pinned.empty()) j["pinned"] = cfg.pinned;
  j["initial"] = cfg.initial;
  if (cfg.initial == "theta") j["theta"] = cfg.theta;
  if (cfg.initial == "coords") j["coords"] = cfg.coords;
  j["tol"] = cfg.tol;
  if (std::isfinite(cfg.t_end)) j["t_end"] = cfg.t_end;
  j["seed"] = cfg.seed;
  return j;
}

std::string preamble(const RunConfig& cfg) {
  std::string out = "# isoflow ";
  out += kVersion;
  out += "\n# config ";
  out += config_json(cfg).dump();
  out += "\n";
  return out;
}

ordered_json report_json(const flow::CollapseReport& r) {
  ordered_json j;
  j["T"] = r.T;
  j["x_limit"] = to_vector(r.x_limit);
  j["active_walls"] = r.active_walls;
  j["fiber_dim"] = r.fiber_dim;
  j["rate_estimate"] = r.rate_estimate;
  j["typeI_estimate"] = r.typeI_estimate;
  j["top_stratum"] = r.top_stratum;
  return j;
}

ordered_json wrap(const RunConfig& cfg) {
  ordered_json j;
  j["version"] = kVersion;
  j["config"] = config_json(cfg);
  return j;
}

std::vector<std::string> rat_strings(const Poly& p) {
  std::vector<std::string> out;
  out.reserve(p.size());
  for (const Rat& r : p) out.push_back(rat_to_string(r));
  if (out.empty()) out.push_back("0");
  return out;
}

}  // namespace

weyl::RootSystemSpec parse_spec_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid spec JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "family" && key != "k" && key != "g" && key != "m" &&
        key != "m1" && key != "m2")
      throw ConfigError("unknown spec field: " + key);
  }
  if (!j.contains("family") || !j["family"].is_string())
    throw ConfigError("spec needs a string field \"family\"");

  weyl::RootSystemSpec sp;
  sp.family = weyl::family_from_string(j["family"].get<std::string>());
  auto get_int = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer())
      throw ConfigError(std::string("\"") + key + "\" must be an integer");
    return v.get<int>();
  };
  if (sp.family == weyl::Family::I2) {
    if (!j.contains("g") || j.contains("k"))
      throw ConfigError("I2 specs take \"g\", not \"k\"");
    sp.g = get_int("g");
    sp.k = 2;
  } else {
    if (!j.contains("k") || j.contains("g"))
      throw ConfigError("A/B/D specs take \"k\", not \"g\"");
    sp.k = get_int("k");
  }
  const bool has_m = j.contains("m");
  const bool has_m1 = j.contains("m1"), has_m2 = j.contains("m2");
  if (has_m && (has_m1 || has_m2))
    throw ConfigError("give either \"m\" or \"m1\"/\"m2\", not both");
  if (has_m1 != has_m2) throw ConfigError("\"m1\" and \"m2\" go together");
  if (has_m) {
    sp.m1 = sp.m2 = get_int("m");
    sp.uniform = true;
  } else if (has_m1) {
    if (!(sp.family == weyl::Family::B ||
          (sp.family == weyl::Family::I2 && sp.g % 2 == 0)))
      throw ConfigError(
          "two multiplicity classes exist only for B(k) and even-g I2");
    sp.m1 = get_int("m1");
    sp.m2 = get_int("m2");
    sp.uniform = (sp.m1 == sp.m2);  // canonical: equal classes collapse to "m"
  } else {
    throw ConfigError("spec needs \"m\" or \"m1\"/\"m2\"");
  }
  return sp;
}

std::string canonical_spec_json(const weyl::RootSystemSpec& spec) {
  return spec_json(spec).dump();
}

std::string config_echo(const RunConfig& cfg) {
  return config_json(cfg).dump();
}

Vec resolve_initial(const weyl::RootSystem& rs, const RunConfig& cfg) {
  if (cfg.initial == "center") return rs.chamber_center();
  if (cfg.initial == "minimal") return analysis::find_minimal_point(rs).x;
  if (cfg.initial == "theta") {
    if (rs.family() != weyl::Family::I2)
      throw ConfigError("--theta starts are defined for the I2 family");
    Vec x(2);
    x << std::cos(cfg.theta), std::sin(cfg.theta);
    return x;
  }
  if (cfg.initial == "coords") {
    if (static_cast<int>(cfg.coords.size()) != rs.dim())
      throw ConfigError("initial point needs " + std::to_string(rs.dim()) +
                        " coordinates for " + rs.name());
    Vec x(rs.dim());
    for (int i = 0; i < x.size(); ++i) x[i] = cfg.coords[i];
    return x;
  }
  throw ConfigError("unknown initial kind: " + cfg.initial);
}

std::string trajectory_csv(const weyl::RootSystem& rs,
                           const flow::Trajectory& traj,
                           const RunConfig& cfg) {
  std::string out = preamble(cfg);
  out += "t";
  for (int i = 1; i <= rs.dim(); ++i) out += ",x" + std::to_string(i);
  out += ",norm_sq,min_wall_gap,radial_residual\n";
  for (const auto& s : traj.samples) {
    out += fmt17(s.t);
    for (int i = 0; i < s.x.size(); ++i) {
      out += ',';
      out += fmt17(s.x[i]);
    }
    out += ',';
    out += fmt17(s.norm_sq);
    out += ',';
    out += fmt17(s.min_wall_gap);
    out += ',';
    out += fmt17(s.radial_residual);
    out += '\n';
  }
  return out;
}

std::string collapse_json(const flow::CollapseReport& report,
                          const RunConfig& cfg,
                          const analysis::SingularityClass* cls) {
  ordered_json j = wrap(cfg);
  j["report"] = report_json(report);
  if (cls != nullptr) {
    ordered_json c;
    c["fiber_type"] = cls->fiber_type;
    c["type_one"] = cls->type_one;
    c["rate_over_2m"] = cls->rate_over_2m;
    c["typeI_estimate"] = cls->typeI_estimate;
    j["classification"] = c;
  }
  return j.dump(2) + "\n";
}

std::string minimal_json(const weyl::RootSystem& rs,
                         const analysis::MinimalPoint& mp,
                         const RunConfig& cfg) {
  ordered_json j = wrap(cfg);
  ordered_json m;
  m["x"] = to_vector(mp.x);
  if (rs.dim() == 2) m["theta"] = std::atan2(mp.x[1], mp.x[0]);
  m["residual"] = mp.residual;
  m["iterations"] = mp.iterations;
  m["n"] = rs.n();
  j["minimal"] = m;
  return j.dump(2) + "\n";
}

std::string invariant_trajectory_json(
    const invariants::InvariantTrajectory& itraj, const RunConfig& cfg) {
  ordered_json j = wrap(cfg);
  ordered_json e;
  e["spherical"] = itraj.spherical;
  e["n"] = itraj.n;
  ordered_json coords = ordered_json::array();
  for (size_t r = 0; r < itraj.coords.size(); ++r) {
    ordered_json c;
    c["name"] = itraj.names[r];
    c["s"] = itraj.degrees[r];
    if (!itraj.spherical) {
      Poly p;
      if (auto it = itraj.coords[r].parts.find(0);
          it != itraj.coords[r].parts.end())
        p = it->second;
      c["coeffs"] = rat_strings(p);
    } else {
      Rat c1 = 0;
      Poly h;
      ordered_json h_exp = ordered_json::array();
      for (const auto& [q, p] : itraj.coords[r].parts) {
        if (q == itraj.degrees[r]) {
          if (p.size() > 1)
            throw ComputeError(
                "resonant spherical coordinate cannot be serialized");
          if (!p.empty()) c1 = p[0];
        } else if (q == 0) {
          h = p;
        } else {
          ordered_json part;
          part["q"] = q;
          part["coeffs"] = rat_strings(p);
          h_exp.push_back(part);
        }
      }
      c["c1"] = rat_to_string(c1);
      c["h"] = rat_strings(h);
      if (!h_exp.empty()) c["h_exp"] = h_exp;
    }
    coords.push_back(c);
  }
  e["coordinates"] = coords;
  j["exact"] = e;
  return j.dump(2) + "\n";
}

std::string exact_collapse_json(const weyl::RootSystem& rs,
                                const invariants::ExactCollapse& ec,
                                const RunConfig& cfg) {
  ordered_json j = wrap(cfg);
  ordered_json e;
  e["T"] = ec.T;
  e["x_limit"] = to_vector(ec.limit.x);
  e["vanishing"] = ec.limit.vanishing;
  e["fiber_type"] = analysis::subsystem_type(rs, ec.limit.vanishing);
  e["radial_bound"] = ec.radial_bound;
  j["exact_collapse"] = e;
  return j.dump(2) + "\n";
}

std::string exact_points_csv(const weyl::RootSystem& rs,
                             const invariants::InvariantTrajectory& itraj,
                             double t_hi, int samples, const RunConfig& cfg) {
  if (samples < 1) throw ConfigError("need at least one sample");
  std::string out = preamble(cfg);
  out += "t";
  for (int i = 1; i <= rs.dim(); ++i) out += ",x" + std::to_string(i);
  out += ",norm_sq,min_wall_gap,radial_residual\n";
  double norm0 = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double t = t_hi * i / samples;
    invariants::RecoveredPoint rp;
    try {
      rp = invariants::recover_point(rs, itraj.evaluate_all(t));
    } catch (const NotInImageError&) {
      break;  // past the first boundary contact
    }
    const double nsq = rp.x.squaredNorm();
    if (i == 0) norm0 = nsq;
    const double expected =
        itraj.spherical ? 1.0 : norm0 - 2.0 * itraj.n * t;
    out += fmt17(t);
    for (int c = 0; c < rp.x.size(); ++c) {
      out += ',';
      out += fmt17(rp.x[c]);
    }
    out += ',';
    out += fmt17(nsq);
    out += ',';
    out += fmt17(rs.min_abs_gap(rp.x));
    out += ',';
    out += fmt17(std::abs(nsq - expected));
    out += '\n';
  }
  return out;
}

std::string rank2_portrait_csv(const rank2::PhasePortrait& pp,
                               const RunConfig& cfg) {
  std::string out = preamble(cfg);
  out += "orbit,theta0,limit_wall,T,t,theta\n";
  for (size_t i = 0; i < pp.orbits.size(); ++i) {
    const auto& orb = pp.orbits[i];
    for (const auto& [t, th] : orb.samples) {
      out += std::to_string(i);
      out += ',';
      out += fmt17(orb.theta0);
      out += ',';
      out += std::to_string(orb.limit_wall);
      out += ',';
      out += fmt17(orb.T);
      out += ',';
      out += fmt17(t);
      out += ',';
      out += fmt17(th);
      out += '\n';
    }
  }
  return out;
}

namespace {

struct SvgCanvas {
  std::string body;
  double width, height;

  SvgCanvas(double w, double h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const char* style) {
    body += "<line x1=\"" + fmt6(x1) + "\" y1=\"" + fmt6(y1) + "\" x2=\"" +
            fmt6(x2) + "\" y2=\"" + fmt6(y2) + "\" style=\"" + style +
            "\"/>\n";
  }
  void polyline(const std::vector<std::array<double, 2>>& pts,
                const char* style) {
    body += "<polyline fill=\"none\" style=\"";
    body += style;
    body += "\" points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
      if (i) body += ' ';
      body += fmt6(pts[i][0]) + "," + fmt6(pts[i][1]);
    }
    body += "\"/>\n";
  }
  void circle(double cx, double cy, double r, const char* style) {
    body += "<circle cx=\"" + fmt6(cx) + "\" cy=\"" + fmt6(cy) + "\" r=\"" +
            fmt6(r) + "\" style=\"" + style + "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const char* style) {
    body += "<text x=\"" + fmt6(x) + "\" y=\"" + fmt6(y) + "\" style=\"" +
            style + "\">" + s + "</text>\n";
  }
  std::string finish() const {
    std::string out =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt6(width) +
        "\" height=\"" + fmt6(height) + "\" viewBox=\"0 0 " + fmt6(width) +
        " " + fmt6(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += body;
    out += "</svg>\n";
    return out;
  }
};

constexpr const char* kAxisStyle = "stroke:#404040;stroke-width:1";
constexpr const char* kTextStyle =
    "font-family:monospace;font-size:12px;fill:#202020";

}  // namespace

std::string rank2_portrait_svg(const rank2::PhasePortrait& pp,
                               const RunConfig& cfg) {
  (void)cfg;
  const double w = 640, h = 480;
  const double l = 70, r = 20, top = 40, bot = 50;
  double t_max = 0.0;
  for (const auto& orb : pp.orbits)
    for (const auto& [t, th] : orb.samples) t_max = std::max(t_max, t);
  if (t_max <= 0.0) t_max = 1.0;
  const double th_max = std::numbers::pi / pp.g;
  auto sx = [&](double t) { return l + (w - l - r) * t / t_max; };
  auto sy = [&](double th) { return h - bot - (h - top - bot) * th / th_max; };

  SvgCanvas svg(w, h);
  svg.line(l, top, l, h - bot, kAxisStyle);
  svg.line(l, h - bot, w - r, h - bot, kAxisStyle);
  svg.line(l, top, w - r, top, "stroke:#a0a0a0;stroke-width:1");
  svg.line(l, sy(pp.theta_min), w - r, sy(pp.theta_min),
           "stroke:#808080;stroke-width:1;stroke-dasharray:6 4");
  svg.text(l, 24,
           "I2(" + std::to_string(pp.g) + ") spherical sector flow, m1=" +
               std::to_string(pp.m1) + " m2=" + std::to_string(pp.m2) +
               " n=" + std::to_string(pp.n),
           kTextStyle);
  svg.text(w - 150, h - 16, "t (0 to " + fmt6(t_max) + ")", kTextStyle);
  svg.text(8, top + 12, "theta", kTextStyle);
  svg.text(8, sy(0.0) + 4, "0", kTextStyle);
  svg.text(8, sy(th_max) + 4, "pi/" + std::to_string(pp.g), kTextStyle);
  svg.text(8, sy(pp.theta_min) + 4, "min", kTextStyle);

  for (const auto& orb : pp.orbits) {
    std::vector<std::array<double, 2>> pts;
    pts.reserve(orb.samples.size());
    for (const auto& [t, th] : orb.samples) pts.push_back({sx(t), sy(th)});
    svg.polyline(pts, orb.limit_wall < 0
                          ? "stroke:#d62728;stroke-width:2"
                          : (orb.limit_wall == 0
                                 ? "stroke:#1f77b4;stroke-width:1.5"
                                 : "stroke:#2ca02c;stroke-width:1.5"));
  }
  return svg.finish();
}

std::string a3_portrait_csv(const analysis::A3Portrait& p,
                            const RunConfig& cfg) {
  std::string out = preamble(cfg);
  out += "start,x1,x2,x3,x4,u,v,region,predicted_wall,observed_wall,match,T\n";
  for (size_t i = 0; i < p.starts.size(); ++i) {
    const auto& st = p.starts[i];
    out += std::to_string(i);
    for (int c = 0; c < st.x.size(); ++c) {
      out += ',';
      out += fmt17(st.x[c]);
    }
    out += ',';
    out += fmt17(st.planar[0]);
    out += ',';
    out += fmt17(st.planar[1]);
    out += ',';
    out += std::to_string(st.region);
    out += ',';
    out += std::to_string(st.predicted_wall);
    out += ',';
    out += std::to_string(st.observed_wall);
    out += ',';
    out += st.match ? '1' : '0';
    out += ',';
    out += fmt17(st.T);
    out += '\n';
  }
  return out;
}

std::string a3_portrait_svg(const analysis::A3Portrait& p,
                            const RunConfig& cfg) {
  (void)cfg;
  const double w = 640, h = 600;
  auto sx = [&](double u) { return 40.0 + 560.0 * u; };
  auto sy = [&](double v) { return 540.0 - 560.0 * v; };
  auto map = [&](const std::array<double, 2>& uv) {
    return std::array<double, 2>{sx(uv[0]), sy(uv[1])};
  };

  SvgCanvas svg(w, h);
  svg.text(40, 24, "A(3) spherical flow: regions and separatrices",
           kTextStyle);
  static const char* region_fill[4] = {"#b0b0b0", "#e41a1c", "#377eb8",
                                       "#4daf4a"};
  // chamber triangle
  for (int i = 0; i < 3; ++i) {
    auto a = map(p.vertices_planar[i]);
    auto b = map(p.vertices_planar[(i + 1) % 3]);
    svg.line(a[0], a[1], b[0], b[1], "stroke:#202020;stroke-width:2");
  }
  // starts under the separatrices
  for (const auto& st : p.starts) {
    auto c = map(st.planar);
    std::string style = std::string("fill:") + region_fill[st.region] +
                        (st.match ? ";stroke:none"
                                  : ";stroke:#000000;stroke-width:1.5");
    svg.circle(c[0], c[1], 3.0, style.c_str());
  }
  // separatrices
  for (int i = 0; i < 3; ++i) {
    std::vector<std::array<double, 2>> pts;
    pts.reserve(p.separatrices_planar[i].size());
    for (const auto& uv : p.separatrices_planar[i]) pts.push_back(map(uv));
    svg.polyline(pts, "stroke:#202020;stroke-width:1.5");
  }
  auto c0 = map(p.p0_planar);
  svg.circle(c0[0], c0[1], 5.0, "fill:#000000");
  svg.text(c0[0] + 8, c0[1] - 6, "p0", kTextStyle);
  for (int i = 0; i < 3; ++i) {
    auto c = map(p.vertices_planar[i]);
    svg.text(c[0] - 4, c[1] + (i == 2 ? -10.0 : 18.0),
             "p" + std::to_string(i + 1), kTextStyle);
  }
  svg.text(40, h - 30,
           "regions D1/D2/D3 colored by predicted wall; black ring = "
           "prediction mismatch",
           kTextStyle);
  svg.text(40, h - 12,
           "match fraction " + fmt6(p.match_fraction) + " over " +
               std::to_string(p.starts.size()) + " starts",
           kTextStyle);
  return svg.finish();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ComputeError("cannot open " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw ComputeError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace isoflow::io
