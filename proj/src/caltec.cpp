#include <cmath>
#include <vector>

#include "featsim/conceal.hpp"
#include "featsim/error.hpp"

namespace featsim {

std::string to_string(Method m) {
  switch (m) {
    case Method::kNone: return "none";
    case Method::kSilrtc: return "silrtc";
    case Method::kHalrtc: return "halrtc";
    case Method::kAltec: return "altec";
    case Method::kCaltec: return "caltec";
    case Method::kNs: return "ns";
    case Method::kHarmonic: return "harmonic";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kNone, Method::kSilrtc, Method::kHalrtc,
                   Method::kAltec, Method::kCaltec, Method::kNs,
                   Method::kHarmonic})
    if (to_string(m) == name) return m;
  throw ParameterError("unknown concealment method '" + name + "'");
}

FeatureTensor conceal_none(const FeatureTensor& t, const ObservationMask& m) {
  if (t.dims() != m.dims()) throw ShapeError("mask dims differ from tensor");
  return t;
}

namespace {

struct Moments {
  std::size_t n = 0;
  double mean_x = 0.0, mean_y = 0.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
};

}  // namespace

FeatureTensor caltec(const FeatureTensor& t, const LossMap& packet_map,
                     const PacketGeometry& geometry) {
  if (geometry.dims() != t.dims())
    throw ShapeError("packet geometry " + to_string(geometry.dims()) +
                     " does not match tensor " + to_string(t.dims()));
  if (packet_map.n_packets() != geometry.packet_count())
    throw ShapeError("loss map length does not match packet geometry");

  const Dims& d = t.dims();
  const std::size_t groups = geometry.groups_per_channel();
  auto received = [&](std::size_t ch, std::size_t g) {
    return !packet_map.is_lost(geometry.packet_index(ch, g));
  };

  FeatureTensor out = t;
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    for (std::size_t g = 0; g < groups; ++g) {
      if (received(ch, g)) continue;

      // Pick the received collocated channel with the strongest linear
      // relation to `ch` over the row groups both channels received.
      std::size_t best = d.c;
      double best_corr = -1.0;
      Moments best_mom;
      for (std::size_t cand = 0; cand < d.c; ++cand) {
        if (cand == ch || !received(cand, g)) continue;
        Moments mom;
        std::size_t shared_rows = 0;
        for (std::size_t sg = 0; sg < groups; ++sg) {
          if (!received(ch, sg) || !received(cand, sg)) continue;
          const auto [first, last] = geometry.rows(sg);
          shared_rows += last - first;
          for (std::size_t i = first; i < last; ++i)
            for (std::size_t j = 0; j < d.w; ++j) {
              mom.mean_x += t.at(i, j, cand);
              mom.mean_y += t.at(i, j, ch);
              ++mom.n;
            }
        }
        if (shared_rows < 2) continue;
        mom.mean_x /= static_cast<double>(mom.n);
        mom.mean_y /= static_cast<double>(mom.n);
        for (std::size_t sg = 0; sg < groups; ++sg) {
          if (!received(ch, sg) || !received(cand, sg)) continue;
          const auto [first, last] = geometry.rows(sg);
          for (std::size_t i = first; i < last; ++i)
            for (std::size_t j = 0; j < d.w; ++j) {
              const double x = t.at(i, j, cand) - mom.mean_x;
              const double y = t.at(i, j, ch) - mom.mean_y;
              mom.sxx += x * x;
              mom.syy += y * y;
              mom.sxy += x * y;
            }
        }
        if (mom.sxx <= 0.0 || mom.syy <= 0.0) continue;
        const double corr = std::abs(mom.sxy / std::sqrt(mom.sxx * mom.syy));
        if (corr > best_corr) {
          best_corr = corr;
          best = cand;
          best_mom = mom;
        }
      }

      const auto [first, last] = geometry.rows(g);
      if (best < d.c) {
        const double a = best_mom.sxy / best_mom.sxx;
        const double b = best_mom.mean_y - a * best_mom.mean_x;
        for (std::size_t i = first; i < last; ++i)
          for (std::size_t j = 0; j < d.w; ++j)
            out.at(i, j, ch) =
                static_cast<float>(a * t.at(i, j, best) + b);
        continue;
      }

      // No usable candidate: average of whatever was received at this
      // group, or zeros when nothing was.
      std::size_t donors = 0;
      std::vector<double> acc((last - first) * d.w, 0.0);
      for (std::size_t cand = 0; cand < d.c; ++cand) {
        if (cand == ch || !received(cand, g)) continue;
        ++donors;
        for (std::size_t i = first; i < last; ++i)
          for (std::size_t j = 0; j < d.w; ++j)
            acc[(i - first) * d.w + j] += t.at(i, j, cand);
      }
      for (std::size_t i = first; i < last; ++i)
        for (std::size_t j = 0; j < d.w; ++j)
          out.at(i, j, ch) =
              donors == 0 ? 0.0f
                          : static_cast<float>(acc[(i - first) * d.w + j] /
                                               static_cast<double>(donors));
    }
  }
  return out;
}

}  // namespace featsim
