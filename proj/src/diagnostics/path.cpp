#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/diagnostics.hpp"

namespace gamescope::diagnostics {

std::size_t thread_count() {
  const char* env = std::getenv("GAMESCOPE_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long value = std::strtol(env, &end, 10);
  if (*end != '\0' || value < 1) return 1;
  return static_cast<std::size_t>(value);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void Grid::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw ArgumentError(fmt::format("grid needs finite a < b, got [{}, {}]", a, b));
  }
  if (points < 2) throw ArgumentError("grid needs at least 2 points");
}

std::vector<double> Grid::alphas() const {
  validate();
  std::vector<double> out(points);
  const double step = (b - a) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = a + step * static_cast<double>(i);
  out.back() = b;
  return out;
}

namespace {

void check_segment(const games::Game& g, const Vector& start, const Vector& end) {
  games::check_state(g, start);
  games::check_state(g, end);
  if (start == end) throw ArgumentError("path endpoints are identical");
}

Vector filtered_field(const games::Game& g, const Vector& w) { return g.filter_field(w, games::vector_field(g, w)); }

}  // namespace

PathProfile path_angle(const games::Game& g, const Vector& start, const Vector& end, const Grid& grid,
                       AngleSign sign) {
  check_segment(g, start, end);
  PathProfile out;
  out.alphas = grid.alphas();
  out.cosines.assign(out.alphas.size(), std::nullopt);
  out.norms.assign(out.alphas.size(), 0.0);
  const Vector direction = end - start;
  const double direction_norm = direction.norm();
  const double orientation = sign == AngleSign::descent ? -1.0 : 1.0;
  parallel_for(out.alphas.size(), [&](std::size_t i) {
    const double alpha = out.alphas[i];
    const Vector v = filtered_field(g, (1.0 - alpha) * start + alpha * end);
    const double norm = v.norm();
    out.norms[i] = norm;
    if (norm > kZeroFieldNorm) {
      const double c = orientation * direction.dot(v) / (direction_norm * norm);
      out.cosines[i] = std::clamp(c, -1.0, 1.0);
    }
  });
  return out;
}

std::vector<double> path_norm(const games::Game& g, const Vector& start, const Vector& end, const Grid& grid) {
  check_segment(g, start, end);
  const std::vector<double> alphas = grid.alphas();
  std::vector<double> norms(alphas.size());
  parallel_for(alphas.size(), [&](std::size_t i) {
    norms[i] = filtered_field(g, (1.0 - alphas[i]) * start + alphas[i] * end).norm();
  });
  return norms;
}

double percentile(std::vector<double> sample, double q) {
  if (sample.empty()) throw ArgumentError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError(fmt::format("percentile level {} outside [0, 1]", q));
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

AggregateProfile aggregate_endpoints(const std::vector<PathProfile>& profiles) {
  if (profiles.empty()) throw ArgumentError("no profiles to aggregate");
  AggregateProfile out;
  out.alphas = profiles.front().alphas;
  for (const PathProfile& p : profiles) {
    if (p.alphas != out.alphas) throw ArgumentError("profiles were computed on different grids");
    if (p.cosines.size() != p.alphas.size() || p.norms.size() != p.alphas.size()) {
      throw ArgumentError("profile arrays do not match its grid");
    }
  }
  out.endpoints = profiles;
  for (std::size_t i = 0; i < out.alphas.size(); ++i) {
    std::vector<double> cos;
    std::vector<double> norms;
    for (const PathProfile& p : profiles) {
      if (p.cosines[i]) cos.push_back(*p.cosines[i]);
      norms.push_back(p.norms[i]);
    }
    if (cos.empty()) {
      out.median_cos.emplace_back();
      out.q25_cos.emplace_back();
      out.q75_cos.emplace_back();
      out.median_abs_cos.emplace_back();
      out.q25_abs_cos.emplace_back();
      out.q75_abs_cos.emplace_back();
    } else {
      out.median_cos.emplace_back(percentile(cos, 0.5));
      out.q25_cos.emplace_back(percentile(cos, 0.25));
      out.q75_cos.emplace_back(percentile(cos, 0.75));
      for (double& c : cos) c = std::abs(c);
      out.median_abs_cos.emplace_back(percentile(cos, 0.5));
      out.q25_abs_cos.emplace_back(percentile(cos, 0.25));
      out.q75_abs_cos.emplace_back(percentile(cos, 0.75));
    }
    out.median_norm.push_back(percentile(norms, 0.5));
    out.q25_norm.push_back(percentile(norms, 0.25));
    out.q75_norm.push_back(percentile(norms, 0.75));
  }
  return out;
}

namespace {

void put(std::ostream& out, const std::optional<double>& x) {
  if (x) fmt::print(out, "{}", *x);
}

}  // namespace

void write_path_angle_csv(std::ostream& out, const AggregateProfile& p) {
  out << "alpha,median_cos,q25_cos,q75_cos,median_norm,q25_norm,q75_norm";
  for (std::size_t e = 0; e < p.endpoints.size(); ++e) fmt::print(out, ",cos_{0},norm_{0}", e);
  out << ",median_abs_cos,q25_abs_cos,q75_abs_cos\n";
  for (std::size_t i = 0; i < p.alphas.size(); ++i) {
    fmt::print(out, "{},", p.alphas[i]);
    put(out, p.median_cos[i]);
    out << ',';
    put(out, p.q25_cos[i]);
    out << ',';
    put(out, p.q75_cos[i]);
    fmt::print(out, ",{},{},{}", p.median_norm[i], p.q25_norm[i], p.q75_norm[i]);
    for (const PathProfile& e : p.endpoints) {
      out << ',';
      put(out, e.cosines[i]);
      fmt::print(out, ",{}", e.norms[i]);
    }
    for (const auto* col : {&p.median_abs_cos, &p.q25_abs_cos, &p.q75_abs_cos}) {
      out << ',';
      put(out, (*col)[i]);
    }
    out << '\n';
  }
}

EndpointSelection select_endpoints(const dynamics::Trajectory& traj, std::size_t count, double eps_stat) {
  const auto& cps = traj.checkpoints;
  if (cps.empty()) throw ArgumentError("trajectory has no checkpoints");
  if (count == 0 || count > cps.size()) {
    throw ArgumentError(fmt::format("cannot select {} endpoints from {} checkpoints", count, cps.size()));
  }
  const double threshold = eps_stat * traj.initial().field_norm;
  EndpointSelection out;
  for (std::size_t i = cps.size(); i-- > 0 && out.indices.size() < count;) {
    if (cps[i].field_norm <= threshold) out.indices.push_back(i);
  }
  if (out.indices.size() < count) {
    out.fallback = true;
    out.indices.resize(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) out.indices[i] = i;
    // Smallest norms first; later checkpoints win ties.
    std::stable_sort(out.indices.begin(), out.indices.end(), [&](std::size_t x, std::size_t y) {
      if (cps[x].field_norm != cps[y].field_norm) return cps[x].field_norm < cps[y].field_norm;
      return x > y;
    });
    out.indices.resize(count);
  }
  std::sort(out.indices.begin(), out.indices.end());
  for (std::size_t i : out.indices) out.states.push_back(cps[i].omega);
  return out;
}

}  // namespace gamescope::diagnostics
