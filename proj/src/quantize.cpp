#include "featsim/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "featsim/error.hpp"

namespace featsim {

QuantizedTensor quantize(const FeatureTensor& t, int n_bits) {
  if (n_bits < 1 || n_bits > 16)
    throw ParameterError("n_bits must be in [1, 16], got " +
                         std::to_string(n_bits));
  const auto v = t.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());

  QuantizedTensor q;
  q.dims = t.dims();
  q.params = {n_bits, static_cast<double>(*lo), static_cast<double>(*hi)};
  q.codes.assign(v.size(), 0);
  if (q.params.t_max == q.params.t_min) return q;

  const double levels = q.params.max_code();
  const double scale = levels / (q.params.t_max - q.params.t_min);
  for (std::size_t i = 0; i < v.size(); ++i) {
    // std::round rounds half away from zero.
    const double code = std::round((v[i] - q.params.t_min) * scale);
    q.codes[i] = static_cast<std::uint16_t>(std::clamp(code, 0.0, levels));
  }
  return q;
}

FeatureTensor dequantize(const QuantizedTensor& q) {
  FeatureTensor out(q.dims);
  auto v = out.values();
  if (q.codes.size() != v.size())
    throw ShapeError("quantized tensor has " + std::to_string(q.codes.size()) +
                     " codes for dims " + to_string(q.dims));
  const double range = q.params.t_max - q.params.t_min;
  const double levels = q.params.max_code();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (range == 0.0) {
      v[i] = static_cast<float>(q.params.t_min);
    } else {
      v[i] = static_cast<float>(q.codes[i] / levels * range + q.params.t_min);
    }
  }
  return out;
}

}  // namespace featsim
