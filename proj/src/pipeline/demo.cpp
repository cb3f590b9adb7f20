#include <cmath>
#include <fstream>
#include <sstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/pipeline.hpp"
#include "gamescope/svg.hpp"
#include "pipeline_util.hpp"

namespace gamescope::pipeline {

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  body(out);
  out.flush();
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

std::string coordinate_name(const Layout& layout, Eigen::Index i) {
  for (const Segment& s : layout.segments()) {
    if (i >= s.offset && i < s.offset + s.size()) {
      return s.size() == 1 ? s.name : fmt::format("{}[{}]", s.name, i - s.offset);
    }
  }
  return fmt::format("omega[{}]", i);
}

diagnostics::Grid read_grid(const io::Config& cfg) {
  diagnostics::Grid g;
  g.a = cfg.get_double("grid.a", g.a);
  g.b = cfg.get_double("grid.b", g.b);
  g.points = cfg.get_uint("grid.points", g.points);
  g.validate();
  return g;
}

void read_classify(const io::Config& cfg, diagnostics::ClassifyOptions& opts) {
  opts.k = cfg.get_uint("k", opts.k);
  opts.eps_stat = cfg.get_double("eps_stat", opts.eps_stat);
  opts.eps_eig = cfg.get_double("eps_eig", opts.eps_eig);
  if (opts.k == 0) throw FormatError("'k' must be positive");
  if (!(opts.eps_stat >= 0.0) || !(opts.eps_eig >= 0.0)) throw FormatError("eps_stat and eps_eig must be non-negative");
}

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<double> nan_gaps(const std::vector<std::optional<double>>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x ? *x : std::numeric_limits<double>::quiet_NaN());
  return out;
}

}  // namespace

DemoSetup demo_setup(const std::string& kind) {
  DemoSetup s;
  if (kind == "example1") {
    s.game = games::make_example1();
    s.points.push_back({"p0", vec({1, 1, 0})});
  } else if (kind == "example2") {
    s.game = games::make_example2();
    s.points.push_back({"p0", vec({0, -1})});
    s.points.push_back({"p1", vec({0, 1})});
  } else if (kind == "bilinear") {
    s.game = games::make_bilinear();
    s.points.push_back({"p0", Vector::Zero(2)});
  } else if (kind.rfind("linear:", 0) == 0) {
    s.game = games::make_linear_game(games::archetype_spec(games::parse_archetype(kind.substr(7))));
    s.points.push_back({"p0", Vector::Zero(2)});
  } else {
    throw ArgumentError(fmt::format(
        "unknown demo game '{}' (expected example1, example2, bilinear or linear:attraction|rotation|mixed)", kind));
  }
  return s;
}

const std::vector<std::string>& demo_keys() {
  static const std::vector<std::string> keys{"game",        "grid.a",       "grid.b",        "grid.points",
                                             "start_offset", "end_offset",  "quiver.span",   "quiver.points",
                                             "k",           "eps_stat",     "eps_eig",       "seed"};
  return keys;
}

DemoOptions demo_options(const io::Config& cfg) {
  cfg.require_known(demo_keys());
  DemoOptions o;
  o.grid = read_grid(cfg);
  if (cfg.has("start_offset")) {
    const auto xs = cfg.get_doubles("start_offset", {});
    o.start_offset = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }
  if (cfg.has("end_offset")) {
    const auto xs = cfg.get_doubles("end_offset", {});
    o.end_offset = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }
  o.quiver_span = cfg.get_double("quiver.span", o.quiver_span);
  o.quiver_points = cfg.get_uint("quiver.points", o.quiver_points);
  if (!(o.quiver_span > 0.0) || o.quiver_points < 2) throw FormatError("quiver needs span > 0 and at least 2 points");
  read_classify(cfg, o.classify);
  return o;
}

void write_eigen_scatter_svg(std::ostream& out, const numerics::Spectrum& s, const std::string& title) {
  io::Panel p;
  p.title = title;
  p.xlabel = "Re(lambda)";
  p.ylabel = "Im(lambda)";
  p.vline = 0.0;
  p.hline = 0.0;
  io::Series pts;
  pts.label = "eigenvalues";
  pts.line = false;
  for (const auto& l : s.eigenvalues) {
    pts.x.push_back(l.real());
    pts.y.push_back(l.imag());
  }
  p.series.push_back(std::move(pts));
  io::write_svg(out, {p}, 520, 480);
}

void write_path_angle_svg(std::ostream& out, const diagnostics::AggregateProfile& a, const std::string& title) {
  io::Panel cos;
  cos.title = title;
  cos.xlabel = "alpha";
  cos.ylabel = "cosine";
  cos.vline = 1.0;
  cos.hline = 0.0;
  cos.bands.push_back({a.alphas, nan_gaps(a.q25_cos), nan_gaps(a.q75_cos), "#1f77b4"});
  cos.series.push_back({"median cosine", a.alphas, nan_gaps(a.median_cos), "#1f77b4", true, true});

  io::Panel abs_cos;
  abs_cos.title = "cosine magnitude";
  abs_cos.xlabel = "alpha";
  abs_cos.ylabel = "|cosine|";
  abs_cos.vline = 1.0;
  abs_cos.bands.push_back({a.alphas, nan_gaps(a.q25_abs_cos), nan_gaps(a.q75_abs_cos), "#9467bd"});
  abs_cos.series.push_back({"median |cosine|", a.alphas, nan_gaps(a.median_abs_cos), "#9467bd", true, true});

  io::Panel norm;
  norm.title = "field norm along the path";
  norm.xlabel = "alpha";
  norm.ylabel = "|v|";
  norm.log_y = true;
  norm.vline = 1.0;
  norm.bands.push_back({a.alphas, a.q25_norm, a.q75_norm, "#ff7f0e"});
  norm.series.push_back({"median norm", a.alphas, a.median_norm, "#ff7f0e", true, true});
  io::write_svg(out, {cos, abs_cos, norm});
}

void write_norm_trace_svg(std::ostream& out, const dynamics::Trajectory& traj, const std::string& title) {
  io::Panel p;
  p.title = title;
  p.xlabel = "iteration";
  p.ylabel = "|v|";
  p.log_y = true;
  io::Series s;
  s.label = "field norm";
  s.color = "#2ca02c";
  for (const auto& c : traj.checkpoints) {
    s.x.push_back(static_cast<double>(c.iteration));
    s.y.push_back(c.field_norm);
  }
  p.series.push_back(std::move(s));
  io::write_svg(out, {p});
}

namespace {

void write_quiver(const games::Game& g, const Vector& anchor, const DemoOptions& o, const fs::path& out) {
  const Eigen::Index ix = 0;
  const Eigen::Index iy = 1;
  std::vector<io::Arrow> arrows;
  const auto q = static_cast<Eigen::Index>(o.quiver_points);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) {
      Vector w = anchor;
      w[ix] += o.quiver_span * (2.0 * static_cast<double>(a) / static_cast<double>(q - 1) - 1.0);
      w[iy] += o.quiver_span * (2.0 * static_cast<double>(b) / static_cast<double>(q - 1) - 1.0);
      const Vector v = g.filter_field(w, games::vector_field(g, w));
      arrows.push_back({w[ix], w[iy], -v[ix], -v[iy]});
    }
  }
  write_file(out / "quiver.csv", [&](std::ostream& os) {
    os << "x,y,u,v\n";
    for (const auto& a : arrows) fmt::print(os, "{},{},{},{}\n", a.x, a.y, a.u, a.v);
  });
  const std::string xl = coordinate_name(g.layout(), ix);
  const std::string yl = coordinate_name(g.layout(), iy);
  write_file(out / "quiver.svg", [&](std::ostream& os) {
    io::write_quiver_svg(os, arrows, fmt::format("{}: descent direction -v", g.name()), xl, yl,
                         std::make_pair(anchor[ix], anchor[iy]));
  });
}

std::string format_point(const Vector& w) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < w.size(); ++i) s += (i ? ", " : "") + io::format_value(w[i]);
  return s + ")";
}

}  // namespace

DemoResult run_demo(const io::Config& cfg, const fs::path& out) {
  const DemoOptions o = demo_options(cfg);
  DemoResult r;
  r.setup = demo_setup(cfg.get_string("game", "example1"));
  const games::Game& g = *r.setup.game;
  fs::create_directories(out);
  write_file(out / "config.txt", [&](std::ostream& os) { cfg.write(os); });

  std::string text;
  for (const DemoPoint& p : r.setup.points) {
    r.reports.push_back(diagnostics::classify(g, p.omega, o.classify));
    const auto& report = r.reports.back();
    std::ostringstream block;
    fmt::print(block, "point {} at {}\n", p.label, format_point(p.omega));
    diagnostics::write_report_text(block, report);
    text += block.str() + "\n";
    write_file(out / fmt::format("report_{}.kv", p.label), [&](std::ostream& os) {
      fmt::print(os, "point={}\n", p.label);
      diagnostics::write_report_kv(os, report);
    });
    const numerics::Spectrum full = numerics::eig_dense(games::jacobian_dense(g, p.omega));
    write_file(out / fmt::format("spectrum_{}.csv", p.label), [&](std::ostream& os) { numerics::write_spectrum_csv(os, full); });
    write_file(out / fmt::format("spectrum_{}.svg", p.label), [&](std::ostream& os) {
      write_eigen_scatter_svg(os, full, fmt::format("{} Jacobian eigenvalues at {}", g.name(), format_point(p.omega)));
    });
  }
  write_file(out / "report.txt", [&](std::ostream& os) { os << text; });

  const Vector& anchor = r.setup.points.front().omega;
  const Eigen::Index n = anchor.size();
  Vector start_offset = Vector::Zero(n);
  start_offset[0] = 1.0;
  Vector end_offset = Vector::Zero(n);
  end_offset[n - 1] = 0.05;
  if (o.start_offset) start_offset = *o.start_offset;
  if (o.end_offset) end_offset = *o.end_offset;
  if (start_offset.size() != n || end_offset.size() != n) {
    throw FormatError(fmt::format("path offsets need {} values for game {}", n, g.name()));
  }
  r.path_start = anchor + start_offset;
  r.path_end = anchor + end_offset;
  r.path = diagnostics::aggregate_endpoints({diagnostics::path_angle(g, r.path_start, r.path_end, o.grid)});
  write_file(out / "path_angle.csv", [&](std::ostream& os) { diagnostics::write_path_angle_csv(os, r.path); });
  write_file(out / "path_angle.svg", [&](std::ostream& os) {
    write_path_angle_svg(os, r.path, fmt::format("{}: path-angle from {} to {}", g.name(), format_point(r.path_start),
                                                 format_point(r.path_end)));
  });

  if (n == 2 || n == 3) write_quiver(g, anchor, o, out);
  return r;
}

}  // namespace gamescope::pipeline
