#include "featsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featsim/error.hpp"
#include "featsim/mask.hpp"

namespace featsim {

std::size_t ObservationMask::lost_count() const {
  return static_cast<std::size_t>(
      std::count(available_.begin(), available_.end(), std::uint8_t{0}));
}

double tensor_mse(const FeatureTensor& a, const FeatureTensor& b) {
  if (a.dims() != b.dims())
    throw ShapeError("mse of tensors " + to_string(a.dims()) + " and " +
                     to_string(b.dims()));
  const auto va = a.values();
  const auto vb = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - vb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(va.size());
}

double psnr_from_mse(double mse, double peak) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double tensor_psnr(const FeatureTensor& a, const FeatureTensor& b,
                   double peak) {
  return psnr_from_mse(tensor_mse(a, b), peak);
}

double masked_mse_lost(const FeatureTensor& a, const FeatureTensor& b,
                       const ObservationMask& mask, std::size_t* lost_count) {
  if (a.dims() != b.dims() || a.dims() != mask.dims())
    throw ShapeError("masked mse needs matching dims");
  const auto va = a.values();
  const auto vb = b.values();
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (mask.available(i)) continue;
    const double d = static_cast<double>(va[i]) - vb[i];
    acc += d * d;
    ++n;
  }
  if (lost_count) *lost_count = n;
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace featsim
