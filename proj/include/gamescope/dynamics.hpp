#pragma once

// Discrete game optimizers, the training loop, and the continuous-time
// linearized flow d omega / dt = -J (omega - omega*) with its decomposition
// into attraction and rotation modes.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gamescope/error.hpp"
#include "gamescope/games.hpp"
#include "gamescope/numerics.hpp"

namespace gamescope::dynamics {

using numerics::ComplexScalar;
using numerics::DenseMatrix;
using numerics::Vector;

enum class OptimizerKind { gd, extragradient, adam, extra_adam };

std::string to_string(OptimizerKind k);
/// Accepts gd, eg / extragradient, adam, extraadam / extra_adam.
OptimizerKind parse_optimizer(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::extragradient;
  double lr_g = 0.1;
  double lr_d = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t iters = 1000;
  /// Iterations between recorded checkpoints.
  std::uint64_t cadence = 100;
  std::uint64_t seed = 0;
  /// ExtraAdam variant that extrapolates with the previous iteration's
  /// update gradient instead of a fresh evaluation.
  bool extrapolate_from_past = false;
  /// Training stops, flagged as diverged, once |omega| exceeds this.
  double divergence_threshold = 1e8;

  /// ArgumentError on non-positive rates, betas outside [0, 1), eps <= 0 or
  /// zero cadence.
  void validate() const;
};

/// Per-coordinate step sizes: lr_g on the generator block, lr_d on the rest.
Vector step_sizes(const games::Game& g, double lr_g, double lr_d);

/// Simultaneous step omega - lr * v(omega), then the game's projection.
Vector gd_step(const games::Game& g, const Vector& omega, double lr_g, double lr_d);

/// omega_half = omega - lr * v(omega); returns omega - lr * v(omega_half).
Vector extragradient_step(const games::Game& g, const Vector& omega, double lr_g, double lr_d);

/// Moment estimates shared by every Adam-type step of one run.
struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t t = 0;
  /// Last update gradient, for the extrapolate-from-the-past variant.
  Vector past;
};

/// Bias-corrected Adam on the game field with per-player rates.
Vector adam_step(const games::Game& g, const Vector& omega, AdamState& state, const OptimizerConfig& cfg);

/// Extrapolation by an Adam step, then an Adam step from omega using the
/// field at the extrapolated point. Both steps update the shared moments.
Vector extra_adam_step(const games::Game& g, const Vector& omega, AdamState& state, const OptimizerConfig& cfg);

struct Checkpoint {
  std::uint64_t iteration = 0;
  Vector omega;
  double field_norm = 0.0;
};

struct Trajectory {
  std::vector<Checkpoint> checkpoints;
  std::uint64_t cadence = 0;
  bool diverged = false;
  /// Why training stopped early, empty otherwise.
  std::string stop_reason;

  const Checkpoint& initial() const { return checkpoints.front(); }
  const Checkpoint& final() const { return checkpoints.back(); }
};

/// |filter_field(omega, v(omega))|.
double field_norm(const games::Game& g, const Vector& omega);

/// Runs cfg.iters steps from init (projected first). Checkpoints are taken at
/// iteration 0, every cadence iterations and at the final iteration; each
/// records field_norm on the frozen game. Per-iteration randomness comes from
/// g.at_iteration(i). On divergence or a non-finite evaluation the run stops
/// and the trajectory is flagged; it does not throw.
Trajectory run_training(const games::Game& g, const OptimizerConfig& cfg, const Vector& init,
                        const std::function<void(const Checkpoint&)>& on_checkpoint = {});

/// iteration,field_norm[,checkpoint] with the file column present when
/// `files` is non-empty (one entry per checkpoint).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& files = {});

enum class ModeClass { attraction, rotation, both };

std::string to_string(ModeClass c);

/// Trichotomy with absolute zero tests: Im = 0 is attraction, Re = 0 (and
/// Im != 0) is rotation, anything else is both.
ModeClass classify_mode(const ComplexScalar& lambda, double zero_tol = 1e-10);

struct Mode {
  /// For a conjugate pair, the member with positive imaginary part.
  ComplexScalar eigenvalue;
  ModeClass kind = ModeClass::attraction;
  /// First column of this mode in the basis.
  Eigen::Index column = 0;
  /// 1 for a real eigenvalue, 2 for a conjugate pair.
  Eigen::Index width = 1;
};

/// Real block diagonalization J = P D P^-1. A real eigenvalue contributes
/// one column; a pair a +- ib (b > 0) with eigenvector u contributes the
/// columns u + conj(u) and i (u - conj(u)) and the block [[a, -b], [b, a]].
struct ModeDecomposition {
  std::vector<Mode> modes;
  DenseMatrix basis;
  DenseMatrix blocks;
  /// 2-norm condition number of the column-normalized basis.
  double condition = 0.0;

  /// Mode coordinates P^-1 delta.
  Vector coordinates(const Vector& delta) const;
  /// exp(-t D) applied to mode coordinates.
  Vector evolve_coordinates(const Vector& coords, double t) const;
};

/// Throws NumericError when the eigenvector basis is near defective
/// (condition above `max_condition`).
ModeDecomposition decompose_modes(const DenseMatrix& j, double max_condition = 1e8);

/// omega* + P exp(-t D) P^-1 (omega0 - omega*).
Vector linear_flow_solution(const DenseMatrix& j, const Vector& omega0, const Vector& center, double t);

struct FlowPath {
  std::vector<double> times;
  std::vector<Vector> states;
};

/// Raised when integration leaves the finite range.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, double time, Vector last_good)
      : NumericError(what), time_(time), last_good_(std::move(last_good)) {}
  double time() const { return time_; }
  const Vector& last_good() const { return last_good_; }

 private:
  double time_;
  Vector last_good_;
};

/// Classical fourth-order Runge-Kutta on d omega / dt = -field(omega) up to
/// time T with step h (the last step is shortened to land on T). States are
/// kept every `record_every` steps and at T.
FlowPath rk4_integrate(const std::function<Vector(const Vector&)>& field, const Vector& omega0, double T, double h,
                       std::size_t record_every = 1);

}  // namespace gamescope::dynamics
