#include <algorithm>
#include <cmath>
#include <vector>

#include "featsim/conceal.hpp"
#include "featsim/error.hpp"

namespace featsim {
namespace {

// One channel as a double-precision image with its missing-pixel set.
struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  std::vector<std::uint8_t> missing;

  double& at(std::size_t i, std::size_t j) { return v[i * w + j]; }
  // Border-clamped read.
  double get(std::ptrdiff_t i, std::ptrdiff_t j) const {
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(h) - 1);
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return v[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j)];
  }
};

Plane extract(const FeatureTensor& t, const ObservationMask& m,
              std::size_t ch) {
  Plane p;
  p.h = t.height();
  p.w = t.width();
  p.v.resize(p.h * p.w);
  p.missing.resize(p.h * p.w);
  for (std::size_t i = 0; i < p.h; ++i)
    for (std::size_t j = 0; j < p.w; ++j) {
      p.v[i * p.w + j] = t.at(i, j, ch);
      p.missing[i * p.w + j] = m.available(i, j, ch) ? 0 : 1;
    }
  return p;
}

void store(const Plane& p, std::size_t ch, FeatureTensor& out) {
  for (std::size_t i = 0; i < p.h; ++i)
    for (std::size_t j = 0; j < p.w; ++j)
      if (p.missing[i * p.w + j]) out.at(i, j, ch) = static_cast<float>(p.v[i * p.w + j]);
}

// Fills the hole from its rim inwards: each layer takes the mean of its
// already-known 8-neighbours. Returns false if the plane has no known pixel,
// in which case the hole is left at zero.
bool onion_peel(Plane& p) {
  std::vector<std::uint8_t> known(p.missing.size());
  std::size_t unknown = 0;
  for (std::size_t k = 0; k < known.size(); ++k) {
    known[k] = p.missing[k] ? 0 : 1;
    unknown += p.missing[k];
  }
  if (unknown == known.size()) {
    std::fill(p.v.begin(), p.v.end(), 0.0);
    return false;
  }
  std::vector<std::pair<std::size_t, double>> layer;
  while (unknown > 0) {
    layer.clear();
    for (std::size_t i = 0; i < p.h; ++i)
      for (std::size_t j = 0; j < p.w; ++j) {
        if (known[i * p.w + j]) continue;
        double acc = 0.0;
        int n = 0;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const auto ni = static_cast<std::ptrdiff_t>(i) + di;
            const auto nj = static_cast<std::ptrdiff_t>(j) + dj;
            if (ni < 0 || nj < 0 || ni >= static_cast<std::ptrdiff_t>(p.h) ||
                nj >= static_cast<std::ptrdiff_t>(p.w))
              continue;
            const std::size_t k = static_cast<std::size_t>(ni) * p.w +
                                  static_cast<std::size_t>(nj);
            if (!known[k]) continue;
            acc += p.v[k];
            ++n;
          }
        if (n > 0) layer.emplace_back(i * p.w + j, acc / n);
      }
    for (const auto& [k, val] : layer) {
      p.v[k] = val;
      known[k] = 1;
    }
    unknown -= layer.size();
  }
  return true;
}

double neighbour_sum(const Plane& p, std::size_t i, std::size_t j) {
  const auto si = static_cast<std::ptrdiff_t>(i);
  const auto sj = static_cast<std::ptrdiff_t>(j);
  return p.get(si - 1, sj) + p.get(si + 1, sj) + p.get(si, sj - 1) +
         p.get(si, sj + 1);
}

// One Jacobi pass over the missing pixels; returns the largest change.
double jacobi_pass(Plane& p, std::vector<double>& scratch) {
  scratch = p.v;
  double max_change = 0.0;
  for (std::size_t i = 0; i < p.h; ++i)
    for (std::size_t j = 0; j < p.w; ++j) {
      const std::size_t k = i * p.w + j;
      if (!p.missing[k]) continue;
      const double next = 0.25 * neighbour_sum(p, i, j);
      max_change = std::max(max_change, std::abs(next - p.v[k]));
      scratch[k] = next;
    }
  p.v.swap(scratch);
  return max_change;
}

std::pair<double, double> known_range(const Plane& p) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < p.v.size(); ++k) {
    if (p.missing[k]) continue;
    lo = std::min(lo, p.v[k]);
    hi = std::max(hi, p.v[k]);
  }
  return {lo, hi};
}

void check_mask(const FeatureTensor& t, const ObservationMask& m) {
  if (t.dims() != m.dims())
    throw ShapeError("mask dims " + to_string(m.dims()) +
                     " differ from tensor " + to_string(t.dims()));
}

}  // namespace

FeatureTensor inpaint_ns(const FeatureTensor& t, const ObservationMask& m,
                         const InpaintParams& params) {
  check_mask(t, m);
  FeatureTensor out = t;
  std::vector<double> lap, update, scratch;
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    Plane p = extract(t, m, ch);
    if (std::none_of(p.missing.begin(), p.missing.end(),
                     [](auto v) { return v != 0; }))
      continue;
    if (!onion_peel(p)) {
      store(p, ch, out);
      continue;
    }
    // Transport runs on the channel rescaled to its received range so that
    // dt means the same thing for every feature magnitude.
    const auto [lo, hi] = known_range(p);
    const double range = hi - lo;
    if (range == 0.0) {
      store(p, ch, out);
      continue;
    }
    for (auto& v : p.v) v = (v - lo) / range;

    lap.assign(p.v.size(), 0.0);
    update.assign(p.v.size(), 0.0);
    for (int sweep = 0; sweep < params.sweeps; ++sweep) {
      for (std::size_t i = 0; i < p.h; ++i)
        for (std::size_t j = 0; j < p.w; ++j)
          lap[i * p.w + j] = neighbour_sum(p, i, j) - 4.0 * p.v[i * p.w + j];
      auto lap_at = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
        i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(p.h) - 1);
        j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(p.w) - 1);
        return lap[static_cast<std::size_t>(i) * p.w + static_cast<std::size_t>(j)];
      };
      for (std::size_t i = 0; i < p.h; ++i)
        for (std::size_t j = 0; j < p.w; ++j) {
          const std::size_t k = i * p.w + j;
          if (!p.missing[k]) continue;
          const auto si = static_cast<std::ptrdiff_t>(i);
          const auto sj = static_cast<std::ptrdiff_t>(j);
          // x runs along columns, y along rows.
          const double lx = 0.5 * (lap_at(si, sj + 1) - lap_at(si, sj - 1));
          const double ly = 0.5 * (lap_at(si + 1, sj) - lap_at(si - 1, sj));
          const double ix = 0.5 * (p.get(si, sj + 1) - p.get(si, sj - 1));
          const double iy = 0.5 * (p.get(si + 1, sj) - p.get(si - 1, sj));
          // Isophote direction is the gradient rotated by 90 degrees.
          update[k] = params.dt * (lx * -iy + ly * ix);
        }
      for (std::size_t k = 0; k < p.v.size(); ++k)
        if (p.missing[k]) p.v[k] += update[k];

      if (params.diffusion_every > 0 && (sweep + 1) % params.diffusion_every == 0)
        for (int s = 0; s < params.diffusion_steps; ++s) jacobi_pass(p, scratch);
    }
    for (auto& v : p.v) v = v * range + lo;
    store(p, ch, out);
  }
  return out;
}

FeatureTensor inpaint_harmonic(const FeatureTensor& t, const ObservationMask& m,
                               const HarmonicParams& params) {
  check_mask(t, m);
  FeatureTensor out = t;
  std::vector<double> scratch;
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    Plane p = extract(t, m, ch);
    if (std::none_of(p.missing.begin(), p.missing.end(),
                     [](auto v) { return v != 0; }))
      continue;
    if (!onion_peel(p)) {
      store(p, ch, out);
      continue;
    }
    const auto [lo, hi] = known_range(p);
    const double tol = params.tolerance * std::max(hi - lo, 1e-30);
    for (int it = 0; it < params.max_iterations; ++it)
      if (jacobi_pass(p, scratch) <= tol) break;
    store(p, ch, out);
  }
  return out;
}

double laplace_residual(const FeatureTensor& t, const ObservationMask& m) {
  check_mask(t, m);
  double worst = 0.0;
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    const Plane p = extract(t, m, ch);
    for (std::size_t i = 0; i < p.h; ++i)
      for (std::size_t j = 0; j < p.w; ++j) {
        if (!p.missing[i * p.w + j]) continue;
        worst = std::max(worst, std::abs(4.0 * p.v[i * p.w + j] -
                                         neighbour_sum(p, i, j)));
      }
  }
  return worst;
}

}  // namespace featsim
