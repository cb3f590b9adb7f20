#pragma once

// Desk-scale GAN on one-dimensional data: one-hidden-layer ReLU generator and
// discriminator, full-batch NSGAN / WGAN-GP / clipped WGAN losses, wrapped as
// a two-player game.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gamescope/games.hpp"
#include "gamescope/mlp.hpp"

namespace gamescope::gan {

using autograd::Var;

struct MogDataset {
  std::vector<double> samples;
  std::uint64_t seed = 0;

  /// Samples as an n x 1 matrix.
  Eigen::MatrixXd as_column() const;
};

/// n draws from 1/2 N(2, 0.5) + 1/2 N(-2, 1) (variances, not deviations).
MogDataset sample_mog(std::size_t n, std::uint64_t seed);

/// "# seed=<seed>", a header line "x", then one sample per line.
void write_dataset_csv(std::ostream& out, const MogDataset& data);
MogDataset read_dataset_csv(std::istream& in);

/// n x dim standard normal latent codes.
Eigen::MatrixXd sample_latent(Eigen::Index n, Eigen::Index dim, std::uint64_t seed);

enum class LossKind { nsgan, wgan_gp, wgan_clip };

std::string to_string(LossKind k);
/// Accepts nsgan, wgan_gp (or wgangp) and wgan_clip.
LossKind parse_loss_kind(const std::string& s);

struct GanConfig {
  LossKind loss = LossKind::nsgan;
  Eigen::Index latent_dim = 16;
  Eigen::Index hidden_dim = 100;
  double gp_coefficient = 1e-3;
  double clip_c = 0.01;
  /// 0 means full batch.
  Eigen::Index batch_size = 0;
  /// Seeds the per-iteration randomness (interpolation weights, minibatches).
  std::uint64_t seed = 0;

  /// Throws ArgumentError on non-positive sizes, negative penalty or
  /// non-positive clipping bound.
  void validate() const;
  MlpSpec generator_spec() const;
  /// Sigmoid head for NSGAN, identity (critic) otherwise.
  MlpSpec discriminator_spec() const;
  /// Generator segments prefixed "g.", then discriminator segments "d.".
  Layout joint_layout() const;
};

/// Bound applied to discriminator probabilities inside log.
inline constexpr double kProbabilityClamp = 1e-7;

struct Losses {
  Var generator;
  Var discriminator;
};

/// data is n x 1, z is m x latent_dim.
///   L_D = -mean log D(x) - mean log(1 - D(G(z))),  L_G = -mean log D(G(z)).
Losses nsgan_losses(const GanConfig& cfg, const Var& gen, const Var& disc, const Var& data, const Var& z);

/// Critic losses with the input-gradient penalty at x_hat = u x + (1 - u) G(z):
///   L_D = mean D(G(z)) - mean D(x) + lambda mean (|dD/dx(x_hat)| - 1)^2,
///   L_G = -mean D(G(z)).
/// `u` has one weight per (data, latent) pair, so data and z need equal rows.
Losses wgangp_losses(const GanConfig& cfg, const Var& gen, const Var& disc, const Var& data, const Var& z,
                     const Eigen::VectorXd& u, double lambda);

/// The penalty term alone, lambda mean (|dD/dx(x_hat)| - 1)^2.
Var gradient_penalty(const MlpSpec& disc_spec, const Var& disc, const Var& x_hat, double lambda);

/// Zeroes coordinates where |phi_i| sits on the clipping bound and the
/// gradient points outward (sign grad_i = -sign phi_i), since a step followed
/// by clipping leaves them unchanged.
Eigen::VectorXd clip_filter(const Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double c);

/// Interpolation weights in [0, 1) for one iteration.
Eigen::VectorXd interpolation_weights(Eigen::Index n, std::uint64_t seed, std::uint64_t iteration);

class GanGame final : public games::Game {
 public:
  /// Full-batch game over frozen data and latent bank.
  GanGame(GanConfig cfg, const MogDataset& data, const Eigen::MatrixXd& z_bank);

  std::string name() const override { return to_string(cfg_.loss); }
  const Layout& layout() const override { return layout_; }
  Eigen::Index generator_size() const override { return generator_size_; }
  std::pair<Var, Var> losses(const Var& theta, const Var& phi) const override;

  /// Fresh interpolation weights (WGAN-GP) and minibatch (batch_size > 0);
  /// nullptr when neither applies.
  std::shared_ptr<const Game> at_iteration(std::uint64_t iteration) const override;
  /// Clips the discriminator to [-c, c] for wgan_clip.
  Eigen::VectorXd project(const Eigen::VectorXd& omega) const override;
  /// Applies clip_filter to the discriminator block for wgan_clip.
  Eigen::VectorXd filter_field(const Eigen::VectorXd& omega, const Eigen::VectorXd& v) const override;

  const GanConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& data() const { return data_.value(); }
  const Eigen::MatrixXd& latent() const { return z_.value(); }
  const Eigen::VectorXd& interpolation() const { return u_; }

 private:
  GanGame(const GanGame& base, Var data, Var z, Eigen::VectorXd u);

  GanConfig cfg_;
  MlpSpec gen_spec_;
  MlpSpec disc_spec_;
  Layout layout_;
  Eigen::Index generator_size_;
  Var full_data_;
  Var full_z_;
  Var data_;
  Var z_;
  Eigen::VectorXd u_;
};

std::shared_ptr<const GanGame> make_gan_game(const GanConfig& cfg, const MogDataset& data,
                                             const Eigen::MatrixXd& z_bank);

/// Both networks initialized with mlp_init; the discriminator uses seed + 1.
ParamVector gan_init(const GanConfig& cfg, std::uint64_t seed);

/// Generator outputs for each latent row, under the joint layout.
Eigen::VectorXd generate(const GanConfig& cfg, const ParamVector& joint, const Eigen::MatrixXd& z);

}  // namespace gamescope::gan
