#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/dynamics.hpp"

namespace gamescope::dynamics {

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::gd:
      return "gd";
    case OptimizerKind::extragradient:
      return "extragradient";
    case OptimizerKind::adam:
      return "adam";
    case OptimizerKind::extra_adam:
      return "extra_adam";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "gd") return OptimizerKind::gd;
  if (s == "eg" || s == "extragradient") return OptimizerKind::extragradient;
  if (s == "adam") return OptimizerKind::adam;
  if (s == "extraadam" || s == "extra_adam") return OptimizerKind::extra_adam;
  throw ArgumentError(fmt::format("unknown optimizer '{}' (expected gd, eg, adam or extraadam)", s));
}

void OptimizerConfig::validate() const {
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw ArgumentError("learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ArgumentError("Adam epsilon must be positive");
  if (cadence == 0) throw ArgumentError("checkpoint cadence must be positive");
  if (!(divergence_threshold > 0.0)) throw ArgumentError("divergence threshold must be positive");
}

Vector step_sizes(const games::Game& g, double lr_g, double lr_d) {
  Vector lr(g.size());
  lr.head(g.generator_size()).setConstant(lr_g);
  lr.tail(g.discriminator_size()).setConstant(lr_d);
  return lr;
}

Vector gd_step(const games::Game& g, const Vector& omega, double lr_g, double lr_d) {
  const Vector lr = step_sizes(g, lr_g, lr_d);
  return g.project(omega - lr.cwiseProduct(games::vector_field(g, omega)));
}

Vector extragradient_step(const games::Game& g, const Vector& omega, double lr_g, double lr_d) {
  const Vector lr = step_sizes(g, lr_g, lr_d);
  const Vector half = g.project(omega - lr.cwiseProduct(games::vector_field(g, omega)));
  return g.project(omega - lr.cwiseProduct(games::vector_field(g, half)));
}

namespace {

void ensure_moments(AdamState& s, Eigen::Index n) {
  if (s.m.size() == 0) {
    s.m = Vector::Zero(n);
    s.v = Vector::Zero(n);
  }
  if (s.m.size() != n || s.v.size() != n) {
    throw ShapeError(fmt::format("Adam moments have length {}, state has {}", s.m.size(), n));
  }
}

// Folds `grad` into the moments and returns the bias-corrected direction.
Vector adam_direction(AdamState& s, const Vector& grad, const OptimizerConfig& cfg) {
  ++s.t;
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * grad;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
  return (s.m / c1).array() / ((s.v / c2).array().sqrt() + cfg.eps);
}

}  // namespace

Vector adam_step(const games::Game& g, const Vector& omega, AdamState& state, const OptimizerConfig& cfg) {
  ensure_moments(state, omega.size());
  const Vector lr = step_sizes(g, cfg.lr_g, cfg.lr_d);
  const Vector dir = adam_direction(state, games::vector_field(g, omega), cfg);
  return g.project(omega - lr.cwiseProduct(dir));
}

Vector extra_adam_step(const games::Game& g, const Vector& omega, AdamState& state, const OptimizerConfig& cfg) {
  ensure_moments(state, omega.size());
  const Vector lr = step_sizes(g, cfg.lr_g, cfg.lr_d);
  Vector first;
  if (cfg.extrapolate_from_past && state.past.size() == omega.size()) {
    first = state.past;
  } else {
    first = games::vector_field(g, omega);
  }
  const Vector half = g.project(omega - lr.cwiseProduct(adam_direction(state, first, cfg)));
  const Vector second = games::vector_field(g, half);
  if (cfg.extrapolate_from_past) state.past = second;
  return g.project(omega - lr.cwiseProduct(adam_direction(state, second, cfg)));
}

double field_norm(const games::Game& g, const Vector& omega) {
  return g.filter_field(omega, games::vector_field(g, omega)).norm();
}

Trajectory run_training(const games::Game& g, const OptimizerConfig& cfg, const Vector& init,
                        const std::function<void(const Checkpoint&)>& on_checkpoint) {
  cfg.validate();
  games::check_state(g, init);
  Trajectory traj;
  traj.cadence = cfg.cadence;
  auto record = [&](std::uint64_t it, const Vector& w) {
    const double norm = field_norm(g, w);
    if (!std::isfinite(norm)) throw NumericError("field norm is not finite");
    traj.checkpoints.push_back({it, w, norm});
    if (on_checkpoint) on_checkpoint(traj.checkpoints.back());
  };

  Vector omega = g.project(init);
  record(0, omega);
  AdamState adam;
  for (std::uint64_t it = 1; it <= cfg.iters; ++it) {
    const std::shared_ptr<const games::Game> resampled = g.at_iteration(it);
    const games::Game& gi = resampled ? *resampled : g;
    try {
      switch (cfg.kind) {
        case OptimizerKind::gd:
          omega = gd_step(gi, omega, cfg.lr_g, cfg.lr_d);
          break;
        case OptimizerKind::extragradient:
          omega = extragradient_step(gi, omega, cfg.lr_g, cfg.lr_d);
          break;
        case OptimizerKind::adam:
          omega = adam_step(gi, omega, adam, cfg);
          break;
        case OptimizerKind::extra_adam:
          omega = extra_adam_step(gi, omega, adam, cfg);
          break;
      }
      if (!omega.allFinite() || omega.norm() > cfg.divergence_threshold) {
        traj.diverged = true;
        traj.stop_reason = fmt::format("state norm exceeded {:g} at iteration {}", cfg.divergence_threshold, it);
        if (omega.allFinite()) record(it, omega);
        break;
      }
      if (it % cfg.cadence == 0 || it == cfg.iters) record(it, omega);
    } catch (const NumericError& e) {
      traj.diverged = true;
      traj.stop_reason = fmt::format("non-finite evaluation at iteration {}: {}", it, e.what());
      break;
    }
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& files) {
  const bool with_files = !files.empty();
  if (with_files && files.size() != traj.checkpoints.size()) {
    throw ArgumentError("one checkpoint file name per checkpoint is required");
  }
  out << (with_files ? "iteration,field_norm,checkpoint\n" : "iteration,field_norm\n");
  for (std::size_t i = 0; i < traj.checkpoints.size(); ++i) {
    const Checkpoint& c = traj.checkpoints[i];
    if (with_files) {
      fmt::print(out, "{},{},{}\n", c.iteration, c.field_norm, files[i]);
    } else {
      fmt::print(out, "{},{}\n", c.iteration, c.field_norm);
    }
  }
}

}  // namespace gamescope::dynamics
