#include <algorithm>
#include <cmath>

#include "featsim/conceal.hpp"
#include "featsim/error.hpp"

namespace featsim {

CompletionConfig CompletionConfig::with_tau(double tau,
                                            std::array<double, 3> alphas) {
  CompletionConfig cfg;
  cfg.alphas = alphas;
  for (int i = 0; i < 3; ++i) cfg.silrtc_taus[i] = alphas[i] * tau;
  return cfg;
}

void CompletionConfig::validate() const {
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ParameterError("mode weights must be >= 0");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ParameterError("mode weights must sum to 1");
  for (double tau : silrtc_taus)
    if (!(tau >= 0.0)) throw ParameterError("SiLRTC thresholds must be >= 0");
  if (!(halrtc_rho > 0.0)) throw ParameterError("HaLRTC rho must be > 0");
  if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be >= 0");
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau) {
  if (!m.allFinite()) throw NumericalError("svt input has non-finite entries");
  if (m.size() == 0) return m;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed");
  const Eigen::VectorXd s =
      (svd.singularValues().array() - tau).max(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

namespace {

std::size_t mode_extent(const Dims& d, int mode) {
  return mode == 0 ? d.h : mode == 1 ? d.w : d.c;
}

}  // namespace

Eigen::MatrixXd unfold(std::span<const double> x, const Dims& d, int mode) {
  const std::size_t rows = mode_extent(d, mode);
  Eigen::MatrixXd m(rows, d.size() / rows);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j)
      for (std::size_t k = 0; k < d.c; ++k) {
        const double v = x[(i * d.w + j) * d.c + k];
        switch (mode) {
          case 0: m(i, j * d.c + k) = v; break;
          case 1: m(j, i * d.c + k) = v; break;
          default: m(k, i * d.w + j) = v; break;
        }
      }
  return m;
}

void fold(const Eigen::MatrixXd& m, const Dims& d, int mode,
          std::span<double> x) {
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j)
      for (std::size_t k = 0; k < d.c; ++k) {
        double& v = x[(i * d.w + j) * d.c + k];
        switch (mode) {
          case 0: v = m(i, j * d.c + k); break;
          case 1: v = m(j, i * d.c + k); break;
          default: v = m(k, i * d.w + j); break;
        }
      }
}

namespace {

// The tensor in double precision, divided by the largest available magnitude
// so thresholds do not depend on the feature scale. Division keeps low-rank
// structure intact, unlike a min-max shift.
struct Normalized {
  std::vector<double> x;
  std::vector<double> observed;
  double scale = 1.0;
};

Normalized normalize(const FeatureTensor& t, const ObservationMask& m) {
  if (t.dims() != m.dims())
    throw ShapeError("mask dims " + to_string(m.dims()) +
                     " differ from tensor " + to_string(t.dims()));
  if (m.lost_count() == m.size())
    throw ValueError("completion needs at least one available element");
  Normalized n;
  const auto v = t.values();
  double peak = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m.available(i)) peak = std::max(peak, std::abs(double{v[i]}));
  n.scale = peak > 0.0 ? peak : 1.0;
  n.x.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) n.x[i] = v[i] / n.scale;
  n.observed = n.x;
  return n;
}

FeatureTensor finish(const FeatureTensor& t, const ObservationMask& m,
                     const Normalized& n) {
  FeatureTensor out = t;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!m.available(i)) v[i] = static_cast<float>(n.x[i] * n.scale);
  return out;
}

double lost_diff(const std::vector<double>& a, const std::vector<double>& b,
                 const ObservationMask& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (m.available(i)) continue;
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

FeatureTensor silrtc(const FeatureTensor& t, const ObservationMask& m,
                     const CompletionConfig& cfg, CompletionStats* stats) {
  cfg.validate();
  Normalized n = normalize(t, m);
  const Dims& d = t.dims();
  std::vector<double> next(n.x.size());
  std::vector<double> folded(n.x.size());
  if (stats) *stats = {};

  for (int it = 0; it < cfg.iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int mode = 0; mode < 3; ++mode) {
      if (cfg.alphas[mode] == 0.0) continue;
      fold(svt(unfold(n.x, d, mode), cfg.silrtc_taus[mode]), d, mode, folded);
      for (std::size_t i = 0; i < next.size(); ++i)
        next[i] += cfg.alphas[mode] * folded[i];
    }
    for (std::size_t i = 0; i < next.size(); ++i)
      if (m.available(i)) next[i] = n.observed[i];

    const double diff = lost_diff(next, n.x, m) * n.scale;
    n.x.swap(next);
    if (stats) {
      stats->iterations_run = it + 1;
      stats->iterate_diffs.push_back(diff);
    }
    if (cfg.tolerance > 0.0 && diff < cfg.tolerance) break;
  }
  return finish(t, m, n);
}

FeatureTensor halrtc(const FeatureTensor& t, const ObservationMask& m,
                     const CompletionConfig& cfg, CompletionStats* stats) {
  cfg.validate();
  Normalized n = normalize(t, m);
  const Dims& d = t.dims();
  const double rho = cfg.halrtc_rho;
  const std::size_t size = n.x.size();
  std::array<std::vector<double>, 3> duals;
  std::array<std::vector<double>, 3> aux;
  for (int mode = 0; mode < 3; ++mode) {
    duals[mode].assign(size, 0.0);
    aux[mode].assign(size, 0.0);
  }
  std::vector<double> shifted(size);
  std::vector<double> next(size);
  if (stats) *stats = {};

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int mode = 0; mode < 3; ++mode) {
      for (std::size_t i = 0; i < size; ++i)
        shifted[i] = n.x[i] + duals[mode][i] / rho;
      const double tau = cfg.alphas[mode] / rho;
      if (tau == 0.0) {
        aux[mode] = shifted;
      } else {
        fold(svt(unfold(shifted, d, mode), tau), d, mode, aux[mode]);
      }
    }
    for (std::size_t i = 0; i < size; ++i) {
      if (m.available(i)) {
        next[i] = n.observed[i];
        continue;
      }
      double acc = 0.0;
      for (int mode = 0; mode < 3; ++mode)
        acc += aux[mode][i] - duals[mode][i] / rho;
      next[i] = acc / 3.0;
    }
    double max_dual = 0.0;
    for (int mode = 0; mode < 3; ++mode)
      for (std::size_t i = 0; i < size; ++i) {
        duals[mode][i] -= rho * (aux[mode][i] - next[i]);
        max_dual = std::max(max_dual, std::abs(duals[mode][i]));
      }

    const double diff = lost_diff(next, n.x, m) * n.scale;
    n.x.swap(next);
    if (stats) {
      stats->iterations_run = it + 1;
      stats->iterate_diffs.push_back(diff);
      stats->max_abs_dual = std::max(stats->max_abs_dual, max_dual);
    }
    if (cfg.tolerance > 0.0 && diff < cfg.tolerance) break;
  }
  return finish(t, m, n);
}

}  // namespace featsim
