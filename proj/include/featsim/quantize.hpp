#pragma once

#include <cstdint>
#include <vector>

#include "featsim/tensor.hpp"

namespace featsim {

// Uniform min-max quantizer parameters. The range is global to the tensor
// and travels as lossless side information.
struct QuantParams {
  int n_bits = 8;
  double t_min = 0.0;
  double t_max = 0.0;

  std::uint32_t max_code() const { return (1u << n_bits) - 1u; }
};

struct QuantizedTensor {
  Dims dims;
  std::vector<std::uint16_t> codes;
  QuantParams params;
};

// code = round((x - t_min) / (t_max - t_min) * (2^n - 1)), rounding half away
// from zero. A constant tensor quantizes to all-zero codes.
// Throws ParameterError unless 1 <= n_bits <= 16.
QuantizedTensor quantize(const FeatureTensor& t, int n_bits);

// x = code / (2^n - 1) * (t_max - t_min) + t_min.
FeatureTensor dequantize(const QuantizedTensor& q);

}  // namespace featsim
