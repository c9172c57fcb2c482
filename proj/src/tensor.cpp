#include "featsim/tensor.hpp"

#include <cmath>
#include <cstring>

#include "featsim/error.hpp"

namespace featsim {

std::string to_string(const Dims& d) {
  return "(" + std::to_string(d.h) + "," + std::to_string(d.w) + "," +
         std::to_string(d.c) + ")";
}

FeatureTensor::FeatureTensor(Dims dims) : dims_(dims), values_(dims.size()) {
  if (dims.h == 0 || dims.w == 0 || dims.c == 0)
    throw ShapeError("tensor dimensions must be positive, got " +
                     to_string(dims));
}

FeatureTensor::FeatureTensor(Dims dims, std::vector<float> values)
    : dims_(dims), values_(std::move(values)) {
  if (dims.h == 0 || dims.w == 0 || dims.c == 0)
    throw ShapeError("tensor dimensions must be positive, got " +
                     to_string(dims));
  if (values_.size() != dims.size())
    throw ShapeError("tensor " + to_string(dims) + " needs " +
                     std::to_string(dims.size()) + " values, got " +
                     std::to_string(values_.size()));
  check_finite(values_);
}

bool FeatureTensor::same_values(const FeatureTensor& other) const {
  return dims_ == other.dims_ &&
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

void check_finite(std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw ValueError("non-finite value at flat index " + std::to_string(i));
  }
}

}  // namespace featsim
