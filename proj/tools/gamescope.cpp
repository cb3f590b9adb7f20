// gamescope: demo games, MoG training runs and landscape diagnostics.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gamescope/autograd.hpp"
#include "gamescope/config.hpp"
#include "gamescope/error.hpp"
#include "gamescope/pipeline.hpp"

namespace {

using namespace gamescope;

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kFormat = 3,
  kNumeric = 4,
  kConvergence = 5,
  kDivergence = 6,
};

struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Config file with one 'key = value' per line")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.assignments, "Override a config entry, key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Run seed");
  cmd->add_option("--out", c.out, "Output directory");
}

// File values first, then --set, then the dedicated flags.
io::Config gather(const Common& c, const std::vector<std::pair<std::string, std::string>>& flags) {
  io::Config cfg = c.config_path.empty() ? io::Config() : io::Config::load(c.config_path);
  for (const auto& a : c.assignments) cfg.set_assignment(a);
  for (const auto& [key, value] : flags) {
    if (!value.empty()) cfg.set(key, value);
  }
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  return cfg;
}

int report(const char* kind, const std::exception& e, int code) {
  fmt::print(stderr, "gamescope: {}: {}\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  autograd::tune_allocator();
  CLI::App app{"Two-player game dynamics and GAN landscape diagnostics"};
  app.require_subcommand(1);

  Common demo_opts;
  std::string demo_game;
  auto* demo = app.add_subcommand("demo", "Analyse a small game around its stationary points");
  add_common(demo, demo_opts);
  demo->add_option("--game", demo_game,
                   "example1 | example2 | bilinear | linear:attraction | linear:rotation | linear:mixed");

  Common train_opts;
  std::string train_game;
  std::string optimizer;
  std::string preset;
  auto* train = app.add_subcommand("train", "Train a GAN on the 1-D mixture of Gaussians");
  add_common(train, train_opts);
  train->add_option("--game", train_game, "nsgan | wgangp");
  train->add_option("--optimizer", optimizer, "gd | eg | adam | extraadam");
  train->add_option("--preset", preset, "paper | ci");

  Common diag_opts;
  std::string run_dir;
  std::string what;
  std::string checkpoint;
  auto* diagnose = app.add_subcommand("diagnose", "Probe a finished training run");
  add_common(diagnose, diag_opts);
  diagnose->add_option("--run", run_dir, "Run directory written by train")->required();
  diagnose->add_option("--what", what, "Comma list of path-angle, spectrum, hessians, classify");
  diagnose->add_option("--checkpoint", checkpoint, "Checkpoint for the spectral probes (default: final)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*demo) {
      const io::Config cfg = gather(demo_opts, {{"game", demo_game}});
      const std::string out = demo_opts.out.empty() ? "demo_out" : demo_opts.out;
      pipeline::run_demo(cfg, out);
      fmt::print("demo written to {}\n", out);
    } else if (*train) {
      const io::Config cfg = pipeline::resolve_train_config(
          gather(train_opts, {{"game", train_game}, {"optimizer", optimizer}, {"preset", preset}}));
      const std::string out = train_opts.out.empty() ? "run_out" : train_opts.out;
      const auto r = pipeline::run_train(cfg, out);
      const auto& t = r.trajectory;
      fmt::print("run written to {}: field norm {} -> {} after {} iterations\n", out, t.initial().field_norm,
                 t.final().field_norm, t.final().iteration);
    } else if (*diagnose) {
      if (diag_opts.seed) throw ArgumentError("diagnose takes its seed from the run directory");
      const io::Config cfg = gather(diag_opts, {{"what", what}, {"checkpoint", checkpoint}});
      const pipeline::Run run = pipeline::load_run(run_dir);
      const std::string out = diag_opts.out.empty() ? run_dir + "/diagnose" : diag_opts.out;
      pipeline::run_diagnose(run, cfg, out);
      fmt::print("diagnostics written to {}\n", out);
    }
  } catch (const ArgumentError& e) {
    return report("usage error", e, kUsage);
  } catch (const FormatError& e) {
    return report("format error", e, kFormat);
  } catch (const ConvergenceError& e) {
    return report("convergence error", e, kConvergence);
  } catch (const DivergenceError& e) {
    return report("divergence", e, kDivergence);
  } catch (const NumericError& e) {
    return report("numeric error", e, kNumeric);
  } catch (const ShapeError& e) {
    return report("numeric error", e, kNumeric);
  } catch (const std::exception& e) {
    return report("error", e, kOther);
  }
  return kOk;
}
