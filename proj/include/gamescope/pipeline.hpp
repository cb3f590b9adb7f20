#pragma once

// Command pipelines shared by the command-line tool and the acceptance
// suite: demo games with their stationary points, MoG training runs written
// to a run directory, and diagnostics read back from one.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gamescope/config.hpp"
#include "gamescope/diagnostics.hpp"
#include "gamescope/dynamics.hpp"
#include "gamescope/gan.hpp"
#include "gamescope/games.hpp"

namespace gamescope::pipeline {

namespace fs = std::filesystem;
using numerics::Vector;

/// Independent seed for one consumer of a run seed (splitmix64 mixing).
enum class SeedStream : std::uint64_t { data = 1, latent = 2, init = 3, game = 4 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

// ---------------------------------------------------------------- demo

struct DemoPoint {
  std::string label;
  Vector omega;
};

struct DemoSetup {
  games::GamePtr game;
  /// Known stationary points; the first one anchors the path probe.
  std::vector<DemoPoint> points;
};

/// example1, example2, linear:attraction, linear:rotation, linear:mixed or
/// bilinear. ArgumentError on anything else.
DemoSetup demo_setup(const std::string& kind);

struct DemoOptions {
  diagnostics::Grid grid;
  /// Path start relative to the anchor point; default +1 on the first
  /// coordinate.
  std::optional<Vector> start_offset;
  /// Path end relative to the anchor point; default +0.05 on the last
  /// coordinate.
  std::optional<Vector> end_offset;
  double quiver_span = 2.0;
  std::size_t quiver_points = 15;
  diagnostics::ClassifyOptions classify;
};

struct DemoResult {
  DemoSetup setup;
  std::vector<diagnostics::StationaryPointReport> reports;
  Vector path_start;
  Vector path_end;
  diagnostics::AggregateProfile path;
};

/// Keys: game, grid.a, grid.b, grid.points, start_offset, end_offset,
/// quiver.span, quiver.points, k, eps_stat, eps_eig, seed.
const std::vector<std::string>& demo_keys();
DemoOptions demo_options(const io::Config& cfg);

/// Writes config.txt, report.txt, report_<label>.kv, spectrum_<label>.csv
/// and .svg, path_angle.csv and .svg, and quiver.csv and .svg for games with
/// two or three coordinates.
DemoResult run_demo(const io::Config& cfg, const fs::path& out);

// ---------------------------------------------------------------- train

/// Keys accepted by train, with their meaning:
///   game (nsgan | wgangp), optimizer (gd | eg | adam | extraadam), preset
///   (paper | ci), seed, samples, hidden, latent, iters, cadence, lr_g, lr_d,
///   gp, beta1, beta2, extrapolate_from_past, divergence_threshold.
const std::vector<std::string>& train_keys();

/// Preset values for one game, before user overrides:
///   paper: 10000 samples, 100 hidden, 30000 iterations;
///   ci: 2000 samples, 50 hidden, 5000 iterations.
/// nsgan uses rates 0.1 / 0.1; wgangp uses 0.01 / 0.1 with penalty 1e-3.
io::Config preset_defaults(const std::string& game, const std::string& preset);

/// Preset defaults overlaid with `user` (which selects game and preset).
io::Config resolve_train_config(const io::Config& user);

struct RunSetup {
  gan::GanConfig gan;
  dynamics::OptimizerConfig optimizer;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Typed view of a resolved training config; FormatError on bad values.
RunSetup run_setup(const io::Config& resolved);

struct TrainResult {
  io::Config config;
  dynamics::Trajectory trajectory;
  fs::path dir;
};

/// Trains from the derived initialization and writes config.txt,
/// dataset.csv, checkpoints/<iteration>.gsck, trajectory.csv,
/// norm_trace.svg and summary.txt under `out`. A diverged run writes the
/// same artifacts and then throws DivergenceError.
TrainResult run_train(const io::Config& resolved, const fs::path& out);

// ------------------------------------------------------------- diagnose

/// A training run read back from disk.
struct Run {
  io::Config config;
  std::shared_ptr<const gan::GanGame> game;
  dynamics::Trajectory trajectory;
};

/// FormatError on missing files or checkpoints that do not fit the layout.
Run load_run(const fs::path& dir);

enum class Probe { path_angle, spectrum, hessians, classify };
std::string to_string(Probe p);
/// path-angle, spectrum, hessians or classify; ArgumentError otherwise.
Probe parse_probe(const std::string& s);

struct DiagnoseOptions {
  std::vector<Probe> probes;
  /// Number of trained endpoints for the path probe.
  std::size_t endpoints = 5;
  /// Endpoint threshold relative to the initial field norm.
  double endpoint_eps = 0.01;
  diagnostics::Grid grid;
  /// Checkpoint for the spectral probes; the final one when empty.
  std::optional<fs::path> checkpoint;
  diagnostics::ClassifyOptions classify;
};

/// Keys: what (comma list), endpoints, endpoint_eps, grid.a, grid.b,
/// grid.points, checkpoint, k, eps_stat, eps_eig.
const std::vector<std::string>& diagnose_keys();
DiagnoseOptions diagnose_options(const io::Config& cfg);

struct DiagnoseResult {
  std::optional<diagnostics::EndpointSelection> selection;
  std::optional<diagnostics::AggregateProfile> path;
  std::optional<numerics::Spectrum> jacobian;
  std::optional<std::array<numerics::Spectrum, 2>> hessians;
  std::optional<diagnostics::StationaryPointReport> report;
};

/// Writes diagnose_config.txt plus, per probe: path_angle.csv / .svg and
/// endpoints.txt; spectrum.csv / .svg; hessian_generator.csv,
/// hessian_discriminator.csv and hessians.svg; report.txt / .kv.
DiagnoseResult run_diagnose(const Run& run, const io::Config& cfg, const fs::path& out);

// -------------------------------------------------------------- shared

/// Scatter of eigenvalues in the complex plane.
void write_eigen_scatter_svg(std::ostream& out, const numerics::Spectrum& s, const std::string& title);
/// Cosine pane (median with quartile band) above a log-scale norm pane.
void write_path_angle_svg(std::ostream& out, const diagnostics::AggregateProfile& p, const std::string& title);
/// Field norm per checkpoint, log scale.
void write_norm_trace_svg(std::ostream& out, const dynamics::Trajectory& traj, const std::string& title);

}  // namespace gamescope::pipeline
