#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/diagnostics.hpp"

namespace gamescope::diagnostics {

namespace {

bool use_dense(std::size_t n, std::size_t k, const SpectrumOptions& opts) { return n <= opts.dense_limit || k >= n; }

Spectrum leading(Spectrum s, std::size_t k) {
  if (s.eigenvalues.size() <= k) return s;
  // Keep a conjugate pair together, as the iterative solver does.
  std::size_t keep = k;
  const ComplexScalar last = s.eigenvalues[k - 1];
  if (last.imag() != 0.0 && s.eigenvalues[k] == std::conj(last)) ++keep;
  s.eigenvalues.resize(keep);
  if (s.residual_norms.size() > keep) s.residual_norms.resize(keep);
  return s;
}

void check_k(std::size_t k) {
  if (k == 0) throw ArgumentError("number of eigenvalues must be positive");
}

}  // namespace

Spectrum game_jacobian_spectrum(const games::Game& g, const Vector& omega, std::size_t k, const SpectrumOptions& opts) {
  check_k(k);
  games::check_state(g, omega);
  const auto n = static_cast<std::size_t>(g.size());
  if (use_dense(n, k, opts)) return leading(numerics::eig_dense(games::jacobian_dense(g, omega)), k);
  return numerics::eig_topk(games::jacobian_operator(g, omega), n, k, opts.arnoldi);
}

double jacobian_cross_check(const games::Game& g, const Vector& omega, std::size_t k,
                            const numerics::ArnoldiOptions& opts) {
  check_k(k);
  games::check_state(g, omega);
  const auto n = static_cast<std::size_t>(g.size());
  const Spectrum iterative = numerics::eig_topk(games::jacobian_operator(g, omega), n, k, opts);
  const Spectrum dense = numerics::eig_dense(games::jacobian_dense(g, omega));
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(k, iterative.size()); ++i) {
    worst = std::max(worst, std::abs(iterative.eigenvalues[i] - dense.eigenvalues[i]));
  }
  return worst;
}

Spectrum player_hessian_spectrum(const games::Game& g, const Vector& omega, Player p, std::size_t k,
                                 const SpectrumOptions& opts) {
  check_k(k);
  games::check_state(g, omega);
  const auto n = static_cast<std::size_t>(g.player_size(p));
  Spectrum s = use_dense(n, k, opts)
                   ? leading(numerics::eig_dense(games::player_hessian_dense(g, omega, p)), k)
                   : numerics::eig_topk(games::player_hessian_operator(g, omega, p), n, k, opts.arnoldi);
  const double tol = 1e-8 * std::max(1.0, s.max_magnitude());
  for (const ComplexScalar& l : s.eigenvalues) {
    if (std::abs(l.imag()) > tol) {
      throw NumericError(fmt::format("{} Hessian has eigenvalue {}{:+}i; the operator is not symmetric",
                                     games::to_string(p), l.real(), l.imag()));
    }
  }
  return s;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::yes:
      return "yes";
    case Verdict::no:
      return "no";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

double margin(const Spectrum& s, double eps_eig) {
  const double scale = s.max_magnitude();
  return eps_eig * (scale > 0.0 ? scale : 1.0);
}

// Positivity of real parts from a possibly partial spectrum.
Verdict positivity(double min_real, double tol, bool full) {
  if (min_real < -tol) return Verdict::no;
  if (full && min_real > tol) return Verdict::yes;
  return Verdict::inconclusive;
}

}  // namespace

StationaryPointReport classify(const games::Game& g, const Vector& omega, const ClassifyOptions& opts) {
  if (!(opts.eps_stat >= 0.0) || !(opts.eps_eig >= 0.0)) throw ArgumentError("thresholds must be non-negative");
  check_k(opts.k);
  games::check_state(g, omega);
  StationaryPointReport r;
  r.game = g.name();
  r.dimension = static_cast<std::size_t>(g.size());
  r.grad_norm = dynamics::field_norm(g, omega);
  r.eps_stat = opts.eps_stat;
  r.is_stationary = r.grad_norm <= opts.eps_stat;

  r.jacobian_full = use_dense(r.dimension, opts.k, opts.spectrum);
  r.jacobian = game_jacobian_spectrum(g, omega, r.jacobian_full ? r.dimension : opts.k, opts.spectrum);
  r.min_real = r.jacobian.min_real();
  r.jacobian_margin = margin(r.jacobian, opts.eps_eig);
  r.lssp = r.is_stationary ? positivity(r.min_real, r.jacobian_margin, r.jacobian_full) : Verdict::no;

  bool any_no = false;
  bool all_yes = true;
  for (Player p : {Player::generator, Player::discriminator}) {
    PlayerReport& pr = r.players[p == Player::generator ? 0 : 1];
    pr.player = p;
    const auto n = static_cast<std::size_t>(g.player_size(p));
    pr.full = use_dense(n, opts.k, opts.spectrum);
    pr.spectrum = player_hessian_spectrum(g, omega, p, pr.full ? n : opts.k, opts.spectrum);
    pr.min_eigenvalue = pr.spectrum.min_real();
    pr.positive_definite = positivity(pr.min_eigenvalue, margin(pr.spectrum, opts.eps_eig), pr.full);
    any_no = any_no || pr.positive_definite == Verdict::no;
    all_yes = all_yes && pr.positive_definite == Verdict::yes;
  }
  if (!r.is_stationary || any_no) {
    r.dne = Verdict::no;
  } else {
    r.dne = all_yes ? Verdict::yes : Verdict::inconclusive;
  }
  return r;
}

namespace {

std::string format_eigenvalue(const ComplexScalar& l) {
  if (l.imag() == 0.0) return fmt::format("{:.10g}", l.real());
  return fmt::format("{:.10g}{:+.10g}i", l.real(), l.imag());
}

std::string join(const Spectrum& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_eigenvalue(s.eigenvalues[i]);
  }
  return out;
}

}  // namespace

void write_report_text(std::ostream& out, const StationaryPointReport& r) {
  fmt::print(out, "game: {} (dimension {})\n", r.game, r.dimension);
  fmt::print(out, "field norm: {:.6g} (threshold {:.3g})\n", r.grad_norm, r.eps_stat);
  fmt::print(out, "stationary: {}\n", r.is_stationary ? "yes" : "no");
  fmt::print(out, "locally stable (all Re(lambda) > 0): {}\n", to_string(r.lssp));
  fmt::print(out, "  {} Jacobian eigenvalues ({}), min Re = {:.6g}, margin {:.3g}\n", r.jacobian.size(),
             r.jacobian_full ? "full spectrum" : "top-k", r.min_real, r.jacobian_margin);
  fmt::print(out, "  {}\n", join(r.jacobian));
  fmt::print(out, "differential Nash (player Hessians positive definite): {}\n", to_string(r.dne));
  for (const PlayerReport& p : r.players) {
    fmt::print(out, "  {} Hessian: {} eigenvalues ({}), min = {:.6g}, positive definite: {}\n",
               games::to_string(p.player), p.spectrum.size(), p.full ? "full spectrum" : "top-k", p.min_eigenvalue,
               to_string(p.positive_definite));
    fmt::print(out, "  {}\n", join(p.spectrum));
  }
}

void write_report_kv(std::ostream& out, const StationaryPointReport& r) {
  fmt::print(out, "game={}\n", r.game);
  fmt::print(out, "dimension={}\n", r.dimension);
  fmt::print(out, "grad_norm={}\n", r.grad_norm);
  fmt::print(out, "eps_stat={}\n", r.eps_stat);
  fmt::print(out, "stationary={}\n", r.is_stationary ? "yes" : "no");
  fmt::print(out, "lssp={}\n", to_string(r.lssp));
  fmt::print(out, "jacobian_full={}\n", r.jacobian_full ? "yes" : "no");
  fmt::print(out, "jacobian_min_real={}\n", r.min_real);
  fmt::print(out, "jacobian_margin={}\n", r.jacobian_margin);
  fmt::print(out, "dne={}\n", to_string(r.dne));
  for (const PlayerReport& p : r.players) {
    const std::string name = games::to_string(p.player);
    fmt::print(out, "{}_hessian_full={}\n", name, p.full ? "yes" : "no");
    fmt::print(out, "{}_hessian_min={}\n", name, p.min_eigenvalue);
    fmt::print(out, "{}_positive_definite={}\n", name, to_string(p.positive_definite));
  }
}

}  // namespace gamescope::diagnostics
