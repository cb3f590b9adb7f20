#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/pipeline.hpp"
#include "gamescope/svg.hpp"
#include "pipeline_util.hpp"

namespace gamescope::pipeline {

using games::Player;

const std::vector<std::string>& train_keys() {
  static const std::vector<std::string> keys{
      "game", "optimizer", "preset", "seed",  "samples", "hidden", "latent", "iters",
      "cadence", "lr_g",   "lr_d",   "gp",    "beta1",   "beta2",  "extrapolate_from_past",
      "divergence_threshold"};
  return keys;
}

io::Config preset_defaults(const std::string& game, const std::string& preset) {
  const gan::LossKind kind = gan::parse_loss_kind(game);
  if (kind == gan::LossKind::wgan_clip) throw ArgumentError("training presets cover nsgan and wgangp only");
  io::Config c;
  c.set("game", gan::to_string(kind));
  c.set("optimizer", "eg");
  c.set("preset", preset);
  c.set("seed", "0");
  c.set("latent", "16");
  if (preset == "paper") {
    c.set("samples", "10000");
    c.set("hidden", "100");
    c.set("iters", "30000");
  } else if (preset == "ci") {
    c.set("samples", "2000");
    c.set("hidden", "50");
    c.set("iters", "5000");
  } else {
    throw ArgumentError(fmt::format("unknown preset '{}' (expected paper or ci)", preset));
  }
  if (kind == gan::LossKind::nsgan) {
    c.set("lr_g", "0.1");
    c.set("lr_d", "0.1");
  } else {
    c.set("lr_g", "0.01");
    c.set("lr_d", "0.1");
    c.set("gp", "0.001");
  }
  return c;
}

io::Config resolve_train_config(const io::Config& user) {
  user.require_known(train_keys());
  io::Config resolved = preset_defaults(user.get_string("game", "nsgan"), user.get_string("preset", "ci"));
  for (const auto& [key, value] : user.entries()) resolved.set(key, value);
  // Normalize spellings so the echoed config is canonical.
  resolved.set("game", gan::to_string(gan::parse_loss_kind(resolved.get_string("game", ""))));
  resolved.set("optimizer", dynamics::to_string(dynamics::parse_optimizer(resolved.get_string("optimizer", ""))));
  if (!resolved.has("cadence")) {
    resolved.set("cadence", std::to_string(std::max<std::uint64_t>(1, resolved.get_uint("iters", 1) / 250)));
  }
  return resolved;
}

RunSetup run_setup(const io::Config& c) {
  c.require_known(train_keys());
  RunSetup s;
  s.seed = c.get_uint("seed", 0);
  s.samples = c.get_uint("samples", 0);
  if (s.samples == 0) throw FormatError("'samples' must be positive");
  s.gan.loss = gan::parse_loss_kind(c.get_string("game", "nsgan"));
  s.gan.hidden_dim = static_cast<Eigen::Index>(c.get_uint("hidden", 100));
  s.gan.latent_dim = static_cast<Eigen::Index>(c.get_uint("latent", 16));
  s.gan.gp_coefficient = c.get_double("gp", s.gan.gp_coefficient);
  s.gan.seed = derive_seed(s.seed, SeedStream::game);
  s.gan.validate();
  auto& o = s.optimizer;
  o.kind = dynamics::parse_optimizer(c.get_string("optimizer", "eg"));
  o.lr_g = c.get_double("lr_g", o.lr_g);
  o.lr_d = c.get_double("lr_d", o.lr_d);
  o.beta1 = c.get_double("beta1", o.beta1);
  o.beta2 = c.get_double("beta2", o.beta2);
  o.iters = c.get_uint("iters", o.iters);
  o.cadence = c.get_uint("cadence", std::max<std::uint64_t>(1, o.iters / 250));
  o.seed = s.gan.seed;
  o.extrapolate_from_past = c.get_bool("extrapolate_from_past", false);
  o.divergence_threshold = c.get_double("divergence_threshold", o.divergence_threshold);
  o.validate();
  return s;
}

namespace {

struct Problem {
  gan::MogDataset data;
  std::shared_ptr<const gan::GanGame> game;
};

Problem build_problem(const RunSetup& s, gan::MogDataset data) {
  const Eigen::MatrixXd z =
      gan::sample_latent(static_cast<Eigen::Index>(s.samples), s.gan.latent_dim, derive_seed(s.seed, SeedStream::latent));
  auto game = gan::make_gan_game(s.gan, data, z);
  return {std::move(data), std::move(game)};
}

double tail_variance(const dynamics::Trajectory& traj) {
  const std::size_t n = traj.checkpoints.size();
  const std::size_t m = std::max<std::size_t>(1, (n + 9) / 10);
  double mean = 0.0;
  for (std::size_t i = n - m; i < n; ++i) mean += traj.checkpoints[i].field_norm;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (std::size_t i = n - m; i < n; ++i) var += std::pow(traj.checkpoints[i].field_norm - mean, 2);
  return var / static_cast<double>(m);
}

}  // namespace

TrainResult run_train(const io::Config& resolved, const fs::path& out) {
  const RunSetup s = run_setup(resolved);
  const Problem p = build_problem(s, gan::sample_mog(s.samples, derive_seed(s.seed, SeedStream::data)));
  const Vector init = gan::gan_init(s.gan, derive_seed(s.seed, SeedStream::init)).values();

  fs::create_directories(out / "checkpoints");
  write_file(out / "config.txt", [&](std::ostream& os) { resolved.write(os); });
  write_file(out / "dataset.csv", [&](std::ostream& os) { gan::write_dataset_csv(os, p.data); });

  const int width = static_cast<int>(std::to_string(s.optimizer.iters).size());
  const Layout& layout = p.game->layout();
  std::vector<std::string> files;
  auto save = [&](const dynamics::Checkpoint& c) {
    const std::string name = fmt::format("checkpoints/{:0{}}.gsck", c.iteration, width);
    save_checkpoint((out / name).string(), ParamVector(layout, c.omega));
    files.push_back(name);
  };
  TrainResult r;
  r.config = resolved;
  r.dir = out;
  r.trajectory = dynamics::run_training(*p.game, s.optimizer, init, save);
  const auto& traj = r.trajectory;

  write_file(out / "trajectory.csv", [&](std::ostream& os) { dynamics::write_trajectory_csv(os, traj, files); });
  write_file(out / "norm_trace.svg", [&](std::ostream& os) {
    write_norm_trace_svg(os, traj,
                         fmt::format("{} / {}: field norm during training", p.game->name(),
                                     dynamics::to_string(s.optimizer.kind)));
  });
  write_file(out / "summary.txt", [&](std::ostream& os) {
    const double initial = traj.initial().field_norm;
    const double final = traj.final().field_norm;
    fmt::print(os, "game={}\noptimizer={}\nlast_iteration={}\ncheckpoints={}\ndiverged={}\nstop_reason={}\n",
               p.game->name(), dynamics::to_string(s.optimizer.kind), traj.final().iteration,
               traj.checkpoints.size(), traj.diverged, traj.stop_reason);
    fmt::print(os, "initial_norm={}\nfinal_norm={}\nrelative_norm={}\ntail_variance={}\n", initial, final,
               final / initial, tail_variance(traj));
  });
  if (traj.diverged) {
    throw DivergenceError(fmt::format("training diverged at iteration {}: {}", traj.final().iteration, traj.stop_reason));
  }
  return r;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw FormatError(fmt::format("{}: cannot parse '{}'", what, text));
  return value;
}

ParamVector load_compatible(const fs::path& path, const Layout& layout) {
  if (!fs::exists(path)) throw FormatError(fmt::format("missing checkpoint '{}'", path.string()));
  ParamVector p = load_checkpoint(path.string());
  if (!(p.layout() == layout)) {
    throw FormatError(fmt::format("checkpoint '{}' does not match the run's parameter layout", path.string()));
  }
  return p;
}

}  // namespace

Run load_run(const fs::path& dir) {
  const fs::path config_path = dir / "config.txt";
  if (!fs::exists(config_path)) throw FormatError(fmt::format("'{}' is not a run directory (no config.txt)", dir.string()));
  Run run;
  run.config = io::Config::load(config_path.string());
  const RunSetup s = run_setup(run.config);

  std::ifstream data_in(dir / "dataset.csv");
  if (!data_in) throw FormatError(fmt::format("cannot read '{}'", (dir / "dataset.csv").string()));
  gan::MogDataset data = gan::read_dataset_csv(data_in);
  if (data.samples.size() != s.samples) {
    throw FormatError(fmt::format("dataset holds {} samples, config says {}", data.samples.size(), s.samples));
  }
  run.game = build_problem(s, std::move(data)).game;

  std::ifstream traj_in(dir / "trajectory.csv");
  if (!traj_in) throw FormatError(fmt::format("cannot read '{}'", (dir / "trajectory.csv").string()));
  std::string line;
  if (!std::getline(traj_in, line) || line != "iteration,field_norm,checkpoint") {
    throw FormatError("trajectory.csv: unexpected header");
  }
  run.trajectory.cadence = s.optimizer.cadence;
  for (int number = 2; std::getline(traj_in, line); ++number) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = fmt::format("trajectory.csv:{}", number);
    if (cells.size() != 3) throw FormatError(fmt::format("{}: expected 3 fields", where));
    dynamics::Checkpoint c;
    c.iteration = parse_number<std::uint64_t>(cells[0], where);
    c.field_norm = parse_number<double>(cells[1], where);
    c.omega = load_compatible(dir / cells[2], run.game->layout()).values();
    run.trajectory.checkpoints.push_back(std::move(c));
  }
  if (run.trajectory.checkpoints.empty()) throw FormatError("trajectory.csv lists no checkpoints");
  return run;
}

std::string to_string(Probe p) {
  switch (p) {
    case Probe::path_angle:
      return "path-angle";
    case Probe::spectrum:
      return "spectrum";
    case Probe::hessians:
      return "hessians";
    case Probe::classify:
      return "classify";
  }
  return "?";
}

Probe parse_probe(const std::string& s) {
  for (Probe p : {Probe::path_angle, Probe::spectrum, Probe::hessians, Probe::classify}) {
    if (s == to_string(p)) return p;
  }
  throw ArgumentError(fmt::format("unknown probe '{}' (expected path-angle, spectrum, hessians or classify)", s));
}

const std::vector<std::string>& diagnose_keys() {
  static const std::vector<std::string> keys{"what",        "endpoints",  "endpoint_eps", "grid.a", "grid.b",
                                             "grid.points", "checkpoint", "k",            "eps_stat", "eps_eig"};
  return keys;
}

DiagnoseOptions diagnose_options(const io::Config& cfg) {
  cfg.require_known(diagnose_keys());
  DiagnoseOptions o;
  for (const std::string& w : split(cfg.get_string("what", "path-angle,spectrum,hessians,classify"), ',')) {
    const auto first = w.find_first_not_of(' ');
    const auto last = w.find_last_not_of(' ');
    if (first == std::string::npos) continue;
    o.probes.push_back(parse_probe(w.substr(first, last - first + 1)));
  }
  if (o.probes.empty()) throw ArgumentError("no probe selected");
  o.endpoints = cfg.get_uint("endpoints", o.endpoints);
  o.endpoint_eps = cfg.get_double("endpoint_eps", o.endpoint_eps);
  o.grid = read_grid(cfg);
  if (cfg.has("checkpoint")) o.checkpoint = cfg.get_string("checkpoint", "");
  read_classify(cfg, o.classify);
  return o;
}

namespace {

bool wants(const DiagnoseOptions& o, Probe p) { return std::find(o.probes.begin(), o.probes.end(), p) != o.probes.end(); }

void write_hessians_svg(std::ostream& out, const std::array<numerics::Spectrum, 2>& h) {
  std::vector<io::Panel> panels;
  for (Player p : {Player::generator, Player::discriminator}) {
    const auto& s = h[p == Player::generator ? 0 : 1];
    io::Panel panel;
    panel.title = fmt::format("{} Hessian: leading eigenvalues", games::to_string(p));
    panel.xlabel = "index";
    panel.ylabel = "eigenvalue";
    panel.hline = 0.0;
    io::Series pts;
    pts.label = "eigenvalues";
    pts.line = false;
    pts.color = p == Player::generator ? "#1f77b4" : "#d62728";
    for (std::size_t i = 0; i < s.size(); ++i) {
      pts.x.push_back(static_cast<double>(i));
      pts.y.push_back(s.eigenvalues[i].real());
    }
    panel.series.push_back(std::move(pts));
    panels.push_back(std::move(panel));
  }
  io::write_svg(out, panels);
}

}  // namespace

DiagnoseResult run_diagnose(const Run& run, const io::Config& cfg, const fs::path& out) {
  const DiagnoseOptions o = diagnose_options(cfg);
  const games::Game& g = *run.game;
  const auto& traj = run.trajectory;
  const Vector omega = o.checkpoint ? load_compatible(*o.checkpoint, g.layout()).values() : traj.final().omega;
  fs::create_directories(out);
  write_file(out / "diagnose_config.txt", [&](std::ostream& os) { cfg.write(os); });

  DiagnoseResult r;
  if (wants(o, Probe::path_angle)) {
    if (traj.checkpoints.size() <= o.endpoints) {
      throw ArgumentError(fmt::format("need more than {} checkpoints for {} trained endpoints", o.endpoints, o.endpoints));
    }
    // Endpoints come from trained checkpoints only; the threshold stays
    // relative to the initial norm.
    dynamics::Trajectory trained = traj;
    trained.checkpoints.erase(trained.checkpoints.begin());
    const double first = trained.initial().field_norm;
    const double eps = first > 0.0 ? o.endpoint_eps * traj.initial().field_norm / first : o.endpoint_eps;
    r.selection = diagnostics::select_endpoints(trained, o.endpoints, eps);
    for (std::size_t& i : r.selection->indices) ++i;
    std::vector<diagnostics::PathProfile> profiles;
    for (const Vector& end : r.selection->states) {
      profiles.push_back(diagnostics::path_angle(g, traj.initial().omega, end, o.grid));
    }
    r.path = diagnostics::aggregate_endpoints(profiles);
    write_file(out / "path_angle.csv", [&](std::ostream& os) { diagnostics::write_path_angle_csv(os, *r.path); });
    write_file(out / "path_angle.svg", [&](std::ostream& os) {
      write_path_angle_svg(os, *r.path,
                           fmt::format("{}: path-angle from initialization to {} trained endpoints", g.name(),
                                       profiles.size()));
    });
    write_file(out / "endpoints.txt", [&](std::ostream& os) {
      fmt::print(os, "fallback={}\nindex,iteration,field_norm\n", r.selection->fallback);
      for (std::size_t i : r.selection->indices) {
        fmt::print(os, "{},{},{}\n", i, traj.checkpoints[i].iteration, traj.checkpoints[i].field_norm);
      }
    });
  }
  if (wants(o, Probe::spectrum)) {
    r.jacobian = diagnostics::game_jacobian_spectrum(g, omega, o.classify.k, o.classify.spectrum);
    write_file(out / "spectrum.csv", [&](std::ostream& os) { numerics::write_spectrum_csv(os, *r.jacobian); });
    write_file(out / "spectrum.svg", [&](std::ostream& os) {
      write_eigen_scatter_svg(os, *r.jacobian, fmt::format("{}: top-{} Jacobian eigenvalues", g.name(), o.classify.k));
    });
  }
  if (wants(o, Probe::hessians)) {
    r.hessians = std::array<numerics::Spectrum, 2>{
        diagnostics::player_hessian_spectrum(g, omega, Player::generator, o.classify.k, o.classify.spectrum),
        diagnostics::player_hessian_spectrum(g, omega, Player::discriminator, o.classify.k, o.classify.spectrum)};
    write_file(out / "hessian_generator.csv", [&](std::ostream& os) { numerics::write_spectrum_csv(os, (*r.hessians)[0]); });
    write_file(out / "hessian_discriminator.csv",
               [&](std::ostream& os) { numerics::write_spectrum_csv(os, (*r.hessians)[1]); });
    write_file(out / "hessians.svg", [&](std::ostream& os) { write_hessians_svg(os, *r.hessians); });
  }
  if (wants(o, Probe::classify)) {
    r.report = diagnostics::classify(g, omega, o.classify);
    write_file(out / "report.txt", [&](std::ostream& os) { diagnostics::write_report_text(os, *r.report); });
    write_file(out / "report.kv", [&](std::ostream& os) { diagnostics::write_report_kv(os, *r.report); });
  }
  return r;
}

}  // namespace gamescope::pipeline
