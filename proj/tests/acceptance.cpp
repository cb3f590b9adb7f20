// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when a criterion fails, unless it was named with --expect-fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gamescope/autograd.hpp"
#include "gamescope/diagnostics.hpp"
#include "gamescope/dynamics.hpp"
#include "gamescope/games.hpp"
#include "gamescope/gan.hpp"
#include "gamescope/numerics.hpp"
#include "gamescope/pipeline.hpp"
#include "test_support.hpp"

using namespace gamescope;
namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

namespace tol {
constexpr double example2_eigen = 1e-10;
constexpr double example1_charpoly = 1e-9;
constexpr double example1_hessian = 1e-10;
constexpr double flow_vs_rk4 = 1e-6;
constexpr double rotation_norm = 1e-8;
constexpr double jvp_fd_relative = 1e-3;
constexpr double jvp_linear = 1e-10;
constexpr double topk_agreement = 1e-6;
constexpr double step_factor = 1e-12;
constexpr double eps_eig = 1e-6;
constexpr double fast_seconds = 1.0;
constexpr double crosscheck_seconds = 120.0;
constexpr double mog_seconds = 15 * 60.0;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Each expected value must be matched by a distinct computed one within tol.
bool same_multiset(const std::vector<cplx>& expected, std::vector<cplx> got, double tolerance, double* worst) {
  *worst = 0.0;
  if (expected.size() != got.size()) return false;
  for (const auto& e : expected) {
    auto it = std::min_element(got.begin(), got.end(),
                               [&](const cplx& a, const cplx& b) { return std::abs(a - e) < std::abs(b - e); });
    *worst = std::max(*worst, std::abs(*it - e));
    got.erase(it);
  }
  return *worst <= tolerance;
}

// ---------------------------------------------------------------- oracles

// Jacobian of the one-dimensional example differentiated by hand:
// v = (t + p^2/4 - 1/4, p^2/4 + 2t - 1/4).
MatrixXd example2_jacobian_oracle(double p) {
  MatrixXd j(2, 2);
  j << 1.0, p / 2.0, 2.0, p / 2.0;
  return j;
}

// Roots of x^2 - tr x + det.
std::vector<cplx> quadratic_roots(double tr, double det) {
  const cplx disc = std::sqrt(cplx(tr * tr - 4.0 * det, 0.0));
  return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

std::optional<double> abs_cos(const std::optional<double>& c) {
  if (!c) return std::nullopt;
  return std::abs(*c);
}

struct BumpStats {
  double peak = 0.0;
  double base = 0.0;
  bool pass = false;
};

// max |c| on [0.9, 1.1] against mean |c| on [0, 0.5].
BumpStats bump(const std::vector<double>& alphas, const std::vector<std::optional<double>>& cos) {
  BumpStats b;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const auto c = abs_cos(cos[i]);
    if (!c) continue;
    if (alphas[i] >= 0.9 && alphas[i] <= 1.1) b.peak = std::max(b.peak, *c);
    if (alphas[i] >= 0.0 && alphas[i] <= 0.5) {
      sum += *c;
      ++count;
    }
  }
  b.base = count ? sum / count : 0.0;
  b.pass = count > 0 && b.peak > 0.0 && b.peak >= 5.0 * b.base;
  return b;
}

struct SignChanges {
  int count = 0;
  bool in_unit_cell = false;
  double left = 0.0;
  double right = 0.0;
};

SignChanges sign_changes(const std::vector<double>& alphas, const std::vector<std::optional<double>>& cos) {
  SignChanges s;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!cos[i] || *cos[i] == 0.0) continue;
    if (prev && ((*cos[*prev] > 0) != (*cos[i] > 0))) {
      ++s.count;
      s.left = alphas[*prev];
      s.right = alphas[i];
      s.in_unit_cell = (i == *prev + 1) && s.left <= 1.0 && 1.0 <= s.right;
    }
    prev = i;
  }
  return s;
}

double variance_of_tail(const dynamics::Trajectory& t) {
  const std::size_t n = t.checkpoints.size();
  const std::size_t m = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n))));
  const std::size_t first = n >= m ? n - m : 0;
  double mean = 0.0;
  for (std::size_t i = first; i < n; ++i) mean += t.checkpoints[i].field_norm;
  mean /= static_cast<double>(n - first);
  double var = 0.0;
  for (std::size_t i = first; i < n; ++i) var += std::pow(t.checkpoints[i].field_norm - mean, 2);
  return var / static_cast<double>(n - first);
}

// ---------------------------------------------------------------- fixtures

struct Settings {
  fs::path work;
  std::string cli;
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

// Trained MoG runs, shared by the cross-check and the reproduction criteria.
class MogRuns {
 public:
  explicit MogRuns(const Settings& s) : settings_(s) {}

  const pipeline::Run& extragradient(std::uint64_t seed) { return run(seed, "eg"); }
  const pipeline::Run& gradient_descent(std::uint64_t seed) { return run(seed, "gd"); }
  double training_seconds() const { return seconds_; }
  bool diverged(std::uint64_t seed, const std::string& opt) const { return diverged_.at({seed, opt}); }

 private:
  const pipeline::Run& run(std::uint64_t seed, const std::string& opt) {
    const auto key = std::make_pair(seed, opt);
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    io::Config user;
    user.set("preset", "ci");
    user.set("game", "nsgan");
    user.set("optimizer", opt);
    user.set("seed", std::to_string(seed));
    const fs::path dir = settings_.work / fmt::format("mog_{}_seed{}", opt, seed);
    fs::remove_all(dir);
    const auto t0 = Clock::now();
    bool diverged = false;
    try {
      pipeline::run_train(pipeline::resolve_train_config(user), dir);
    } catch (const DivergenceError&) {
      diverged = true;
    }
    seconds_ += seconds_since(t0);
    diverged_[key] = diverged;
    return runs_.emplace(key, pipeline::load_run(dir)).first->second;
  }

  Settings settings_;
  std::map<std::pair<std::uint64_t, std::string>, pipeline::Run> runs_;
  std::map<std::pair<std::uint64_t, std::string>, bool> diverged_;
  double seconds_ = 0.0;
};

// ---------------------------------------------------------------- criteria

Outcome closed_form_spectra() {
  const auto t0 = Clock::now();
  const games::GamePtr ex2 = games::make_example2();
  double worst2 = 0.0;
  bool ok = true;
  for (double p : {1.0, -1.0}) {
    const VectorXd w = vec({0.0, p});
    const MatrixXd j = games::jacobian_dense(*ex2, w);
    // Hand-differentiated Jacobian and its quadratic roots, then the
    // published closed forms.
    ok = ok && (j - example2_jacobian_oracle(p)).norm() <= tol::example2_eigen;
    const MatrixXd o = example2_jacobian_oracle(p);
    const auto roots = quadratic_roots(o.trace(), o.determinant());
    const std::vector<cplx> published =
        p > 0 ? std::vector<cplx>{(3.0 + std::sqrt(17.0)) / 4.0, (3.0 - std::sqrt(17.0)) / 4.0}
              : std::vector<cplx>{cplx(0.25, std::sqrt(7.0) / 4.0), cplx(0.25, -std::sqrt(7.0) / 4.0)};
    double w1 = 0.0;
    double w2 = 0.0;
    const auto got = numerics::eig_dense(j).eigenvalues;
    ok = ok && same_multiset(roots, got, tol::example2_eigen, &w1) && same_multiset(published, got, tol::example2_eigen, &w2);
    worst2 = std::max({worst2, w1, w2});
  }

  const games::GamePtr ex1 = games::make_example1();
  const auto spec1 = numerics::eig_dense(games::jacobian_dense(*ex1, vec({1, 1, 0}))).eigenvalues;
  double worst_poly = 0.0;
  double min_re = std::numeric_limits<double>::infinity();
  for (const auto& l : spec1) {
    worst_poly = std::max(worst_poly, std::abs(l * l * l - l * l + 11.0 * l - 2.0));
    min_re = std::min(min_re, l.real());
  }
  ok = ok && spec1.size() == 3 && worst_poly <= tol::example1_charpoly && min_re > 0.0;
  const double secs = seconds_since(t0);
  ok = ok && secs < tol::fast_seconds;
  return {ok, fmt::format("example2 max error {:.2e}; example1 |chi(lambda)| max {:.2e}, min Re {:.4f}; {:.3f}s", worst2,
                          worst_poly, min_re, secs)};
}

Outcome classification_table() {
  using diagnostics::Verdict;
  const auto t0 = Clock::now();
  struct Row {
    games::GamePtr game;
    VectorXd point;
    Verdict lssp;
    Verdict dne;
    std::string label;
  };
  const std::vector<Row> rows{
      {games::make_example1(), vec({1, 1, 0}), Verdict::yes, Verdict::no, "example1 (1,1,0)"},
      {games::make_example2(), vec({0, 1}), Verdict::no, Verdict::yes, "example2 (0,1)"},
      {games::make_example2(), vec({0, -1}), Verdict::yes, Verdict::no, "example2 (0,-1)"},
  };
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const auto rep = diagnostics::classify(*r.game, r.point);
    const bool row_ok = rep.is_stationary && rep.lssp == r.lssp && rep.dne == r.dne;
    ok = ok && row_ok;
    detail += fmt::format("{}: LSSP {} DNE {}; ", r.label, diagnostics::to_string(rep.lssp), diagnostics::to_string(rep.dne));
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < tol::fast_seconds;
  return {ok, detail + fmt::format("{:.3f}s", secs)};
}

Outcome generator_saddle() {
  const auto g = games::make_example1();
  const auto s = numerics::eig_dense(games::player_hessian_dense(*g, vec({1, 1, 0}), games::Player::generator));
  double worst = 0.0;
  const bool ok = same_multiset({2.0, -1.0}, s.eigenvalues, tol::example1_hessian, &worst);
  return {ok, fmt::format("generator Hessian eigenvalues {}, {}; max error {:.2e}", s.eigenvalues[0].real(),
                          s.eigenvalues.size() > 1 ? s.eigenvalues[1].real() : NAN, worst)};
}

Outcome linear_flow() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const MatrixXd j = test_support::random_diagonalizable(n, rng, 0.0, 1.5, 2.5, 1e4);
    const VectorXd center = VectorXd::Random(n);
    const VectorXd w0 = VectorXd::Random(n) * 2;
    const double t = std::uniform_real_distribution<double>(0.5, 10.0)(rng);
    const auto path = dynamics::rk4_integrate([&](const VectorXd& w) { return VectorXd(j * (w - center)); }, w0, t,
                                              1e-3, 1000000);
    const VectorXd closed = dynamics::linear_flow_solution(j, w0, center, t);
    worst = std::max(worst, (closed - path.states.back()).norm() / (1.0 + w0.norm()));
  }

  // Rotation modes: purely imaginary pairs mixed with decaying modes.
  double drift = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 6;
    MatrixXd d = MatrixXd::Zero(n, n);
    d(0, 1) = -1.5 - trial;
    d(1, 0) = 1.5 + trial;
    d(2, 3) = -0.4;
    d(3, 2) = 0.4;
    d(4, 4) = 0.8;
    d(5, 5) = 0.3;
    const MatrixXd p = test_support::random_matrix(n, rng);
    const MatrixXd j = p * d * p.inverse();
    const auto modes = dynamics::decompose_modes(j);
    const VectorXd center = VectorXd::Random(n);
    const VectorXd w0 = center + VectorXd::Random(n);
    for (const auto& m : modes.modes) {
      if (m.kind != dynamics::ModeClass::rotation) continue;
      const double r0 = modes.coordinates(w0 - center).segment(m.column, 2).norm();
      for (double t = 0.0; t <= 20.0; t += 0.25) {
        const VectorXd w = dynamics::linear_flow_solution(j, w0, center, t);
        drift = std::max(drift, std::abs(modes.coordinates(w - center).segment(m.column, 2).norm() - r0));
      }
    }
  }
  const bool ok = worst <= tol::flow_vs_rk4 && drift <= tol::rotation_norm;
  return {ok, fmt::format("closed form vs RK4 max {:.2e} (scaled by 1+|w0|); rotation-pair norm drift {:.2e}", worst,
                          drift)};
}

Outcome path_angle_signatures(const fs::path& work) {
  const auto t0 = Clock::now();
  io::Config attraction;
  attraction.set("game", "linear:attraction");
  attraction.set("end_offset", "0, 0");
  const auto a = pipeline::run_demo(attraction, work / "demo_attraction");
  const auto sc = sign_changes(a.path.alphas, a.path.median_cos);

  io::Config rotation;
  rotation.set("game", "linear:rotation");
  const auto r = pipeline::run_demo(rotation, work / "demo_rotation");
  const auto b = bump(r.path.alphas, r.path.median_cos);
  const double secs = seconds_since(t0);
  const bool ok = sc.count == 1 && sc.in_unit_cell && b.pass && secs < tol::fast_seconds;
  return {ok, fmt::format("attraction: {} sign change(s), last in [{:.4f}, {:.4f}]; rotation: peak |c| {:.4f} vs base "
                          "{:.4f} (ratio {:.1f}); {:.3f}s",
                          sc.count, sc.left, sc.right, b.peak, b.base, b.base > 0 ? b.peak / b.base : INFINITY, secs)};
}

Outcome jvp_oracle() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    gan::GanConfig cfg;
    cfg.loss = s % 2 ? gan::LossKind::wgan_gp : gan::LossKind::nsgan;
    cfg.hidden_dim = 5 + s % 4;
    cfg.latent_dim = 2 + s % 3;
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto data = gan::sample_mog(24, 1000 + s);
    const auto g = gan::make_gan_game(cfg, data, gan::sample_latent(24, cfg.latent_dim, 2000 + s));
    VectorXd w(g->size());
    VectorXd u(g->size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = 0.5 * normal(rng);
      u[i] = normal(rng);
    }
    u.normalize();
    const VectorXd jv = games::jacobian_operator(*g, w)(u);
    const double h = 1e-5;
    const VectorXd fd = (games::vector_field(*g, VectorXd(w + h * u)) - games::vector_field(*g, VectorXd(w - h * u))) / (2 * h);
    worst = std::max(worst, (jv - fd).norm() / std::max(fd.norm(), 1e-12));
  }

  double linear_worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const int p = 1 + s % 4;
    const int d = 2 + s % 3;
    games::LinearGameSpec spec{test_support::random_matrix(p, rng), test_support::random_matrix(d, rng),
                               MatrixXd::Random(d, p), MatrixXd::Random(p, d), VectorXd::Random(p + d)};
    const auto g = games::make_linear_game(spec);
    const MatrixXd j = games::linear_jacobian(spec);
    const auto op = games::jacobian_operator(*g, VectorXd::Random(p + d));
    for (int c = 0; c < p + d; ++c) {
      linear_worst = std::max(linear_worst, (op(VectorXd::Unit(p + d, c)) - j.col(c)).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = worst <= tol::jvp_fd_relative && linear_worst <= tol::jvp_linear;
  return {ok, fmt::format("50 MLP game states: max relative error vs central differences {:.2e}; linear columns max error "
                          "{:.2e}",
                          worst, linear_worst)};
}

// Top-k agreement: magnitudes in order, and each iterative value close to a
// distinct dense value among the leading ones.
double topk_deviation(const numerics::Spectrum& dense, const numerics::Spectrum& iter, std::size_t k) {
  double worst = 0.0;
  std::vector<cplx> pool(dense.eigenvalues.begin(),
                         dense.eigenvalues.begin() + static_cast<std::ptrdiff_t>(std::min(dense.size(), k + 4)));
  for (std::size_t i = 0; i < k; ++i) {
    worst = std::max(worst, std::abs(std::abs(iter.eigenvalues[i]) - std::abs(dense.eigenvalues[i])));
    auto it = std::min_element(pool.begin(), pool.end(), [&](const cplx& a, const cplx& b) {
      return std::abs(a - iter.eigenvalues[i]) < std::abs(b - iter.eigenvalues[i]);
    });
    worst = std::max(worst, std::abs(*it - iter.eigenvalues[i]));
    pool.erase(it);
  }
  return worst;
}

Outcome dense_vs_arnoldi(MogRuns& mog, std::uint64_t seed) {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 181);
    const MatrixXd m = test_support::separated_spectrum_matrix(n, rng);
    const auto dense = numerics::eig_dense(m);
    numerics::ArnoldiOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto iter = numerics::eig_topk([&](const VectorXd& x) { return VectorXd(m * x); }, n, 5, opts);
    worst = std::max(worst, topk_deviation(dense, iter, 5));
  }

  const pipeline::Run& run = mog.extragradient(seed);
  const VectorXd& w = run.trajectory.final().omega;
  const auto t0 = Clock::now();
  const auto n = static_cast<std::size_t>(run.game->size());
  const auto iter = numerics::eig_topk(games::jacobian_operator(*run.game, w), n, 5);
  const auto dense = numerics::eig_dense(games::jacobian_dense(*run.game, w));
  const double mog_dev = topk_deviation(dense, iter, 5);
  const double secs = seconds_since(t0);
  const bool ok = worst <= tol::topk_agreement && mog_dev <= tol::topk_agreement && secs < tol::crosscheck_seconds;
  std::string top;
  for (std::size_t i = 0; i < 5; ++i) top += fmt::format(" {:.4f}{:+.4f}i", dense.eigenvalues[i].real(), dense.eigenvalues[i].imag());
  return {ok, fmt::format("20 random matrices max deviation {:.2e}; MoG Jacobian (n={}, seed {} trained endpoint) "
                          "deviation {:.2e}, dense top-5{}; cross-check {:.1f}s",
                          worst, n, seed, mog_dev, top, secs)};
}

Outcome optimizer_dichotomy() {
  const auto g = games::make_linear_game(games::archetype_spec(games::Archetype::rotation));
  double worst = 0.0;
  for (double eta : {0.01, 0.1, 0.5}) {
    const double gd_factor = std::sqrt(1.0 + eta * eta);
    const double eg_factor = std::sqrt(1.0 - eta * eta + std::pow(eta, 4));
    VectorXd a = vec({1.0, 0.5});
    VectorXd b = a;
    for (int step = 0; step < 50; ++step) {
      const VectorXd a1 = dynamics::gd_step(*g, a, eta, eta);
      const VectorXd b1 = dynamics::extragradient_step(*g, b, eta, eta);
      worst = std::max(worst, std::abs(a1.norm() / a.norm() - gd_factor));
      worst = std::max(worst, std::abs(b1.norm() / b.norm() - eg_factor));
      a = a1;
      b = b1;
    }
  }
  return {worst <= tol::step_factor, fmt::format("max per-step factor error {:.2e} over 50 steps each", worst)};
}

Outcome mog_reproduction(MogRuns& mog, const Settings& s) {
  const auto t0 = Clock::now();
  const double train_before = mog.training_seconds();
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed : s.seeds) {
    const pipeline::Run& eg = mog.extragradient(seed);
    const pipeline::Run& gd = mog.gradient_descent(seed);
    const auto& te = eg.trajectory;
    const double ratio = te.final().field_norm / te.initial().field_norm;
    const double var_eg = variance_of_tail(te);
    const double var_gd = variance_of_tail(gd.trajectory);
    const bool gd_diverged = mog.diverged(seed, "gd");
    const bool a = !mog.diverged(seed, "eg") && ratio <= 0.1 && (gd_diverged || var_gd >= 10.0 * var_eg);

    io::Config dc;
    dc.set("what", "path-angle,spectrum,hessians");
    dc.set("endpoints", "5");
    const auto d = pipeline::run_diagnose(eg, dc, s.work / fmt::format("mog_eg_seed{}", seed) / "diagnose");

    const auto& spec = *d.jacobian;
    const double top = spec.max_magnitude();
    double best_im = 0.0;
    for (const auto& l : spec.eigenvalues) {
      if (std::abs(l.imag()) < 0.1 * top) continue;
      const bool paired = std::any_of(spec.eigenvalues.begin(), spec.eigenvalues.end(),
                                      [&](const cplx& m) { return std::abs(m - std::conj(l)) <= 1e-8 * top; });
      if (paired) best_im = std::max(best_im, std::abs(l.imag()));
    }
    const bool b = best_im >= 0.1 * top;

    const auto bs = bump(d.path->alphas, d.path->median_cos);
    const bool c = bs.pass;

    const auto& gen = (*d.hessians)[0];
    double gen_min = std::numeric_limits<double>::infinity();
    for (const auto& l : gen.eigenvalues) gen_min = std::min(gen_min, l.real());
    const double margin = tol::eps_eig * std::max(1.0, gen.max_magnitude());
    const bool dd = gen_min <= -margin;

    const bool all = a && b && c && dd;
    passed += all ? 1 : 0;
    detail += fmt::format(
        "\n    seed {}: {} | (a) {} eg |v| {:.4g} -> {:.4g} (ratio {:.3g}), gd {}|v| final {:.4g}, tail var eg {:.3g} gd "
        "{:.3g} | (b) {} max|Im| {:.4g} vs 0.1*max|lambda| {:.4g} | (c) {} peak {:.3f} base {:.3f}{} | (d) {} "
        "generator Hessian min {:.4g}",
        seed, all ? "pass" : "fail", a ? "ok" : "no", te.initial().field_norm, te.final().field_norm, ratio,
        gd_diverged ? "diverged, " : "", gd.trajectory.final().field_norm, var_eg, var_gd, b ? "ok" : "no", best_im,
        0.1 * top, c ? "ok" : "no", bs.peak, bs.base, d.selection->fallback ? " (endpoint fallback)" : "",
        dd ? "ok" : "no", gen_min);
  }
  // Training time spent earlier for the cross-check counts here too.
  const double secs = seconds_since(t0) + train_before;
  const bool ok = passed >= 2 && secs <= tol::mog_seconds;
  return {ok, fmt::format("{}/{} seeds pass all of (a)-(d); {:.0f}s total{}", passed, s.seeds.size(), secs, detail)};
}

std::map<std::string, std::string> csv_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome determinism(const Settings& s) {
  if (s.cli.empty() || !fs::exists(s.cli)) return {false, fmt::format("command-line tool not found at '{}'", s.cli)};
  const std::vector<std::string> commands{
      "demo --game linear:rotation --out {}/demo_rotation",
      "demo --game example1 --out {}/demo_example1",
      "demo --game example2 --out {}/demo_example2",
      "train --preset ci --game nsgan --optimizer eg --seed 3 --set iters=200 --set samples=500 --out {}/run",
      "train --preset ci --game wgangp --optimizer extraadam --seed 4 --set iters=100 --set samples=300 --out {}/run_gp",
      "diagnose --run {}/run --what path-angle,spectrum,hessians --set k=6 --out {}/run/diagnose",
  };
  std::array<fs::path, 2> roots{s.work / "determinism_a", s.work / "determinism_b"};
  for (int rep = 0; rep < 2; ++rep) {
    fs::remove_all(roots[rep]);
    fs::create_directories(roots[rep]);
    for (const auto& c : commands) {
      const std::string args = fmt::format(fmt::runtime(c), roots[rep].string(), roots[rep].string());
      // The second pass also uses several worker threads.
      const std::string line = fmt::format("{}\"{}\" {} > /dev/null", rep ? "GAMESCOPE_THREADS=3 " : "", s.cli, args);
      if (std::system(line.c_str()) != 0) return {false, fmt::format("command failed: {}", line)};
    }
  }
  const auto a = csv_tree(roots[0]);
  const auto b = csv_tree(roots[1]);
  std::size_t differing = 0;
  for (const auto& [name, text] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != text) ++differing;
  }
  const bool ok = !a.empty() && a.size() == b.size() && differing == 0;
  return {ok, fmt::format("{} CSV files from {} commands compared across two invocations; {} differ", a.size(),
                          commands.size(), differing)};
}

}  // namespace

int main(int argc, char** argv) {
  autograd::tune_allocator();
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::vector<int> expect_fail;
  Settings settings;
  std::string work = (fs::temp_directory_path() / "gamescope_acceptance").string();
#ifdef GAMESCOPE_CLI
  settings.cli = GAMESCOPE_CLI;
#endif
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "Criteria whose failure does not fail the run")->delimiter(',');
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--cli", settings.cli, "Path to the gamescope executable");
  app.add_option("--seeds", settings.seeds, "MoG seeds")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  settings.work = work;
  fs::create_directories(settings.work);

  MogRuns mog(settings);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, closed_form_spectra},
      {2, classification_table},
      {3, generator_saddle},
      {4, linear_flow},
      {5, [&] { return path_angle_signatures(settings.work); }},
      {6, jvp_oracle},
      {7, [&] { return dense_vs_arnoldi(mog, settings.seeds.front()); }},
      {8, optimizer_dichotomy},
      {9, [&] { return mog_reproduction(mog, settings); }},
      {10, [&] { return determinism(settings); }},
  };

  int unexpected = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const bool tolerated = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    if (!o.pass && !tolerated) ++unexpected;
    fmt::print("criterion {}: {}{} [{:.1f}s] {}\n", id, o.pass ? "PASS" : "FAIL",
               !o.pass && tolerated ? " (expected)" : "", seconds_since(t0), o.detail);
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
