#pragma once

// Landscape probes for a game: Path-angle and Path-norm along a straight
// segment, aggregation over several endpoints, Jacobian and per-player
// Hessian spectra, and stationary-point classification.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gamescope/dynamics.hpp"
#include "gamescope/games.hpp"
#include "gamescope/numerics.hpp"

namespace gamescope::diagnostics {

using games::Player;
using numerics::ComplexScalar;
using numerics::Spectrum;
using numerics::Vector;

/// Number of worker threads for independent evaluations: GAMESCOPE_THREADS
/// when set to a positive integer, otherwise 1.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
/// exception thrown by any index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Uniform grid over [a, b] including both ends.
struct Grid {
  double a = 0.0;
  double b = 1.2;
  std::size_t points = 120;

  /// ArgumentError unless a < b (both finite) and points >= 2.
  void validate() const;
  std::vector<double> alphas() const;
};

/// Which vector enters the cosine: the descent direction -v (default) or v.
enum class AngleSign { descent, raw };

/// Field norms below this are treated as zero and their cosine is missing.
inline constexpr double kZeroFieldNorm = 1e-12;

struct PathProfile {
  std::vector<double> alphas;
  /// Cosine between the segment direction and the (signed) field; missing
  /// where the field vanishes.
  std::vector<std::optional<double>> cosines;
  /// Joint norm of the field.
  std::vector<double> norms;
};

/// Evaluates the filtered field at (1 - alpha) start + alpha end for each
/// grid point. ArgumentError on identical endpoints or a bad grid.
PathProfile path_angle(const games::Game& g, const Vector& start, const Vector& end, const Grid& grid = {},
                       AngleSign sign = AngleSign::descent);

/// Joint field norms along the same segment.
std::vector<double> path_norm(const games::Game& g, const Vector& start, const Vector& end, const Grid& grid = {});

/// Percentile with linear interpolation between order statistics
/// (q in [0, 1]). ArgumentError on an empty sample.
double percentile(std::vector<double> sample, double q);

struct AggregateProfile {
  std::vector<double> alphas;
  std::vector<PathProfile> endpoints;
  /// Statistics over endpoints with a recorded cosine; missing when none has.
  std::vector<std::optional<double>> median_cos;
  std::vector<std::optional<double>> q25_cos;
  std::vector<std::optional<double>> q75_cos;
  std::vector<double> median_norm;
  std::vector<double> q25_norm;
  std::vector<double> q75_norm;
  /// Same statistics over |cos|.
  std::vector<std::optional<double>> median_abs_cos;
  std::vector<std::optional<double>> q25_abs_cos;
  std::vector<std::optional<double>> q75_abs_cos;
};

/// Per-alpha median and quartiles. ArgumentError on an empty list or when
/// the grids differ.
AggregateProfile aggregate_endpoints(const std::vector<PathProfile>& profiles);

/// alpha,median_cos,q25_cos,q75_cos,median_norm,q25_norm,q75_norm then
/// cos_i,norm_i per endpoint, then median_abs_cos,q25_abs_cos,q75_abs_cos.
/// Missing values are empty fields.
void write_path_angle_csv(std::ostream& out, const AggregateProfile& profile);

struct EndpointSelection {
  /// Checkpoint indices in trajectory order.
  std::vector<std::size_t> indices;
  std::vector<Vector> states;
  /// True when fewer than `count` checkpoints met the threshold and the
  /// smallest-norm checkpoints were taken instead.
  bool fallback = false;
};

/// The last `count` checkpoints whose field norm is at most
/// eps_stat * (initial field norm). ArgumentError on an empty trajectory,
/// count == 0 or count above the number of checkpoints.
EndpointSelection select_endpoints(const dynamics::Trajectory& traj, std::size_t count, double eps_stat);

struct SpectrumOptions {
  /// Use the dense solver when the operator dimension is at most this or
  /// when k covers the whole dimension.
  std::size_t dense_limit = 200;
  numerics::ArnoldiOptions arnoldi;
};

/// Top-k eigenvalues of the game Jacobian at omega.
Spectrum game_jacobian_spectrum(const games::Game& g, const Vector& omega, std::size_t k,
                                const SpectrumOptions& opts = {});

/// Largest deviation between the top-k Arnoldi eigenvalues and the leading
/// eigenvalues of the dense Jacobian, matched in spectral order.
double jacobian_cross_check(const games::Game& g, const Vector& omega, std::size_t k,
                            const numerics::ArnoldiOptions& opts = {});

/// Top-k eigenvalues of one player's Hessian of its own loss. Throws
/// NumericError when an eigenvalue has |Im| above 1e-8 max(1, max |lambda|).
Spectrum player_hessian_spectrum(const games::Game& g, const Vector& omega, Player p, std::size_t k,
                                 const SpectrumOptions& opts = {});

enum class Verdict { yes, no, inconclusive };

std::string to_string(Verdict v);

struct ClassifyOptions {
  std::size_t k = 20;
  /// Absolute field-norm threshold for stationarity.
  double eps_stat = 1e-8;
  /// Eigenvalue margin relative to the largest computed magnitude.
  double eps_eig = 1e-6;
  SpectrumOptions spectrum;
};

struct PlayerReport {
  Player player = Player::generator;
  Spectrum spectrum;
  /// Smallest real part among the computed eigenvalues.
  double min_eigenvalue = 0.0;
  /// Whether every eigenvalue was computed.
  bool full = false;
  Verdict positive_definite = Verdict::inconclusive;
};

struct StationaryPointReport {
  std::string game;
  std::size_t dimension = 0;
  double grad_norm = 0.0;
  double eps_stat = 0.0;
  bool is_stationary = false;
  Spectrum jacobian;
  bool jacobian_full = false;
  double min_real = 0.0;
  /// Absolute margin used for the Jacobian verdict.
  double jacobian_margin = 0.0;
  Verdict lssp = Verdict::inconclusive;
  std::array<PlayerReport, 2> players;
  Verdict dne = Verdict::inconclusive;
};

/// Stationarity, locally-stable-point and differential-Nash verdicts.
///
/// LSSP: "no" off stationarity or when a computed eigenvalue has real part
/// below -margin; "yes" only from a full spectrum with every real part above
/// the margin; otherwise "inconclusive". DNE follows the same rule per
/// player Hessian and combines them: any "no" wins, then any inconclusive.
StationaryPointReport classify(const games::Game& g, const Vector& omega, const ClassifyOptions& opts = {});

/// Human-readable block.
void write_report_text(std::ostream& out, const StationaryPointReport& r);
/// One key=value per line.
void write_report_kv(std::ostream& out, const StationaryPointReport& r);

}  // namespace gamescope::diagnostics
