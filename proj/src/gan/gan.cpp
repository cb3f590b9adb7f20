#include "gamescope/gan.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/error.hpp"

namespace gamescope::gan {

using autograd::add;
using autograd::mean;
using autograd::scale;

Eigen::MatrixXd MogDataset::as_column() const {
  return Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
}

MogDataset sample_mog(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("dataset needs at least one sample");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution right(0.5);
  std::normal_distribution<double> right_mode(2.0, std::sqrt(0.5));
  std::normal_distribution<double> left_mode(-2.0, 1.0);
  MogDataset d;
  d.seed = seed;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) d.samples.push_back(right(rng) ? right_mode(rng) : left_mode(rng));
  return d;
}

void write_dataset_csv(std::ostream& out, const MogDataset& data) {
  fmt::print(out, "# seed={}\nx\n", data.seed);
  for (double x : data.samples) fmt::print(out, "{}\n", x);
}

MogDataset read_dataset_csv(std::istream& in) {
  MogDataset d;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# seed=", 0) != 0) throw FormatError("dataset: missing '# seed=' line");
  try {
    std::size_t used = 0;
    d.seed = std::stoull(line.substr(7), &used);
    if (used != line.size() - 7) throw FormatError("dataset: malformed seed");
  } catch (const std::logic_error&) {
    throw FormatError("dataset: malformed seed");
  }
  if (!std::getline(in, line) || line != "x") throw FormatError("dataset: missing 'x' header");
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(line, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != line.size() || !std::isfinite(x)) throw FormatError(fmt::format("dataset: bad value on line {}", lineno));
    d.samples.push_back(x);
  }
  if (d.samples.empty()) throw FormatError("dataset: no samples");
  return d;
}

Eigen::MatrixXd sample_latent(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw ArgumentError("latent bank needs positive size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = normal(rng);
  return z;
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::nsgan:
      return "nsgan";
    case LossKind::wgan_gp:
      return "wgan_gp";
    case LossKind::wgan_clip:
      return "wgan_clip";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "nsgan") return LossKind::nsgan;
  if (s == "wgan_gp" || s == "wgangp") return LossKind::wgan_gp;
  if (s == "wgan_clip") return LossKind::wgan_clip;
  throw ArgumentError(fmt::format("unknown GAN loss '{}' (expected nsgan, wgan_gp or wgan_clip)", s));
}

void GanConfig::validate() const {
  if (latent_dim < 1 || hidden_dim < 1) throw ArgumentError("latent and hidden dimensions must be positive");
  if (!(gp_coefficient >= 0.0)) throw ArgumentError("gradient penalty coefficient must be non-negative");
  if (loss == LossKind::wgan_clip && !(clip_c > 0.0)) throw ArgumentError("clipping bound must be positive");
  if (batch_size < 0) throw ArgumentError("batch size must be non-negative");
}

MlpSpec GanConfig::generator_spec() const { return {latent_dim, hidden_dim, 1, OutputActivation::identity}; }

MlpSpec GanConfig::discriminator_spec() const {
  return {1, hidden_dim, 1, loss == LossKind::nsgan ? OutputActivation::sigmoid : OutputActivation::identity};
}

Layout GanConfig::joint_layout() const {
  Layout l;
  l.append(generator_spec().layout(), "g.").append(discriminator_spec().layout(), "d.");
  return l;
}

namespace {

Var clamp_probability(const Var& p) { return autograd::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

Losses nsgan_losses(const GanConfig& cfg, const Var& gen, const Var& disc, const Var& data, const Var& z) {
  const MlpSpec disc_spec = cfg.discriminator_spec();
  const Var fake = mlp_forward(cfg.generator_spec(), gen, z);
  const Var p_real = clamp_probability(mlp_forward(disc_spec, disc, data));
  const Var p_fake = clamp_probability(mlp_forward(disc_spec, disc, fake));
  const Var log_fake = autograd::log(p_fake);
  const Var log_not_fake = autograd::log(autograd::add_scalar(scale(p_fake, -1.0), 1.0));
  const Var loss_d = scale(add(mean(autograd::log(p_real)), mean(log_not_fake)), -1.0);
  return {scale(mean(log_fake), -1.0), loss_d};
}

Var gradient_penalty(const MlpSpec& disc_spec, const Var& disc, const Var& x_hat, double lambda) {
  const bool recording = autograd::grad_enabled();
  // Under no-grad evaluation the interpolates are constants; probe a fresh
  // leaf so the input gradient still exists.
  const Var probe = x_hat.requires_grad() ? x_hat : Var::leaf(x_hat.value());
  Var dx;
  {
    autograd::GradModeGuard on(true);
    const Var critic = mlp_forward(disc_spec, disc, probe);
    dx = autograd::grad(autograd::sum(critic), probe,
                        recording ? autograd::GraphMode::create : autograd::GraphMode::discard);
  }
  if (!recording) dx = dx.detached();
  return scale(mean(autograd::square(autograd::add_scalar(autograd::abs(dx), -1.0))), lambda);
}

Losses wgangp_losses(const GanConfig& cfg, const Var& gen, const Var& disc, const Var& data, const Var& z,
                     const Eigen::VectorXd& u, double lambda) {
  if (data.rows() != z.rows() || u.size() != data.rows()) {
    throw ShapeError(fmt::format("gradient penalty pairs {} data rows, {} latent rows and {} weights", data.rows(),
                                 z.rows(), u.size()));
  }
  const MlpSpec disc_spec = cfg.discriminator_spec();
  const Var fake = mlp_forward(cfg.generator_spec(), gen, z);
  const Var d_real = mlp_forward(disc_spec, disc, data);
  const Var d_fake = mlp_forward(disc_spec, disc, fake);
  const Var x_hat = add(autograd::mul(Var::constant(u), data),
                        autograd::mul(Var::constant(Eigen::VectorXd::Ones(u.size()) - u), fake));
  Var loss_d = autograd::sub(mean(d_fake), mean(d_real));
  if (lambda != 0.0) loss_d = add(loss_d, gradient_penalty(disc_spec, disc, x_hat, lambda));
  return {scale(mean(d_fake), -1.0), loss_d};
}

Eigen::VectorXd clip_filter(const Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double c) {
  if (phi.size() != grad.size()) throw ShapeError("clip_filter: parameter and gradient lengths differ");
  Eigen::VectorXd out = grad;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const bool on_bound = std::abs(phi(i)) >= c - 1e-12;
    const bool outward = grad(i) != 0.0 && phi(i) != 0.0 && std::signbit(grad(i)) != std::signbit(phi(i));
    if (on_bound && outward) out(i) = 0.0;
  }
  return out;
}

Eigen::VectorXd interpolation_weights(Eigen::Index n, std::uint64_t seed, std::uint64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32), 0x9e37u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = unit(rng);
  return u;
}

GanGame::GanGame(GanConfig cfg, const MogDataset& data, const Eigen::MatrixXd& z_bank)
    : cfg_(std::move(cfg)),
      gen_spec_(cfg_.generator_spec()),
      disc_spec_(cfg_.discriminator_spec()),
      layout_(cfg_.joint_layout()),
      generator_size_(gen_spec_.parameter_count()) {
  cfg_.validate();
  if (data.samples.empty()) throw ArgumentError("GAN game needs data");
  if (z_bank.cols() != cfg_.latent_dim) {
    throw ShapeError(fmt::format("latent bank has {} columns, expected {}", z_bank.cols(), cfg_.latent_dim));
  }
  full_data_ = Var::constant(data.as_column());
  full_z_ = Var::constant(z_bank);
  if (cfg_.batch_size > 0) {
    // Iteration 0's minibatch doubles as the frozen game.
    const auto first = at_iteration(0);
    const auto& g = static_cast<const GanGame&>(*first);
    data_ = g.data_;
    z_ = g.z_;
    u_ = g.u_;
  } else {
    data_ = full_data_;
    z_ = full_z_;
    if (cfg_.loss == LossKind::wgan_gp) {
      if (z_bank.rows() != full_data_.rows()) {
        throw ShapeError("WGAN-GP pairs data and latent rows; their counts must match");
      }
      u_ = interpolation_weights(z_bank.rows(), cfg_.seed, 0);
    }
  }
}

GanGame::GanGame(const GanGame& base, Var data, Var z, Eigen::VectorXd u)
    : cfg_(base.cfg_),
      gen_spec_(base.gen_spec_),
      disc_spec_(base.disc_spec_),
      layout_(base.layout_),
      generator_size_(base.generator_size_),
      full_data_(base.full_data_),
      full_z_(base.full_z_),
      data_(std::move(data)),
      z_(std::move(z)),
      u_(std::move(u)) {}

std::pair<Var, Var> GanGame::losses(const Var& theta, const Var& phi) const {
  Losses l;
  switch (cfg_.loss) {
    case LossKind::nsgan:
      l = nsgan_losses(cfg_, theta, phi, data_, z_);
      break;
    case LossKind::wgan_gp:
      l = wgangp_losses(cfg_, theta, phi, data_, z_, u_, cfg_.gp_coefficient);
      break;
    case LossKind::wgan_clip:
      l = wgangp_losses(cfg_, theta, phi, data_, z_, Eigen::VectorXd::Zero(data_.rows()), 0.0);
      break;
  }
  return {l.generator, l.discriminator};
}

std::shared_ptr<const games::Game> GanGame::at_iteration(std::uint64_t iteration) const {
  const bool minibatch = cfg_.batch_size > 0;
  if (!minibatch && cfg_.loss != LossKind::wgan_gp) return nullptr;
  Var data = full_data_;
  Var z = full_z_;
  if (minibatch) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32), 0x51edu};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<Eigen::Index> pick_x(0, full_data_.rows() - 1);
    std::uniform_int_distribution<Eigen::Index> pick_z(0, full_z_.rows() - 1);
    Eigen::MatrixXd xb(cfg_.batch_size, 1);
    Eigen::MatrixXd zb(cfg_.batch_size, cfg_.latent_dim);
    for (Eigen::Index i = 0; i < cfg_.batch_size; ++i) {
      xb(i, 0) = full_data_.value()(pick_x(rng), 0);
      zb.row(i) = full_z_.value().row(pick_z(rng));
    }
    data = Var::constant(std::move(xb));
    z = Var::constant(std::move(zb));
  }
  Eigen::VectorXd u;
  if (cfg_.loss == LossKind::wgan_gp) u = interpolation_weights(data.rows(), cfg_.seed, iteration);
  return std::shared_ptr<const GanGame>(new GanGame(*this, std::move(data), std::move(z), std::move(u)));
}

Eigen::VectorXd GanGame::project(const Eigen::VectorXd& omega) const {
  if (cfg_.loss != LossKind::wgan_clip) return omega;
  Eigen::VectorXd out = omega;
  out.tail(discriminator_size()) = out.tail(discriminator_size()).cwiseMax(-cfg_.clip_c).cwiseMin(cfg_.clip_c);
  return out;
}

Eigen::VectorXd GanGame::filter_field(const Eigen::VectorXd& omega, const Eigen::VectorXd& v) const {
  if (cfg_.loss != LossKind::wgan_clip) return v;
  Eigen::VectorXd out = v;
  const Eigen::Index d = discriminator_size();
  out.tail(d) = clip_filter(omega.tail(d), v.tail(d), cfg_.clip_c);
  return out;
}

std::shared_ptr<const GanGame> make_gan_game(const GanConfig& cfg, const MogDataset& data,
                                             const Eigen::MatrixXd& z_bank) {
  return std::make_shared<const GanGame>(cfg, data, z_bank);
}

ParamVector gan_init(const GanConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ParamVector g = mlp_init(cfg.generator_spec(), seed);
  const ParamVector d = mlp_init(cfg.discriminator_spec(), seed + 1);
  Eigen::VectorXd values(g.size() + d.size());
  values << g.values(), d.values();
  ParamVector joint(cfg.joint_layout(), std::move(values));
  if (cfg.loss == LossKind::wgan_clip) {
    const Eigen::Index n = d.size();
    Eigen::VectorXd clipped = joint.values();
    clipped.tail(n) = clipped.tail(n).cwiseMax(-cfg.clip_c).cwiseMin(cfg.clip_c);
    joint = ParamVector(cfg.joint_layout(), std::move(clipped));
  }
  return joint;
}

Eigen::VectorXd generate(const GanConfig& cfg, const ParamVector& joint, const Eigen::MatrixXd& z) {
  if (!(joint.layout() == cfg.joint_layout())) throw ShapeError("parameters do not match the GAN layout");
  autograd::NoGradGuard no_grad;
  const MlpSpec spec = cfg.generator_spec();
  const Var out = mlp_forward(spec, Var::constant(joint.values().head(spec.parameter_count())), Var::constant(z));
  return out.value().col(0);
}

}  // namespace gamescope::gan
