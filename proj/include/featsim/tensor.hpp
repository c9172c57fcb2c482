#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace featsim {

struct Dims {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;

  std::size_t size() const { return h * w * c; }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

struct TensorMeta {
  std::string model_name;
  std::string layer_name;
  std::string source_image_id;
};

// h x w x c feature map stored row-major in (h, w, c) order, i.e. the channel
// index varies fastest. All values are finite.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  // Zero-initialized tensor. Throws ShapeError on a zero dimension.
  explicit FeatureTensor(Dims dims);
  // Throws ShapeError if values.size() != h*w*c, ValueError on NaN/Inf.
  FeatureTensor(Dims dims, std::vector<float> values);

  const Dims& dims() const { return dims_; }
  std::size_t height() const { return dims_.h; }
  std::size_t width() const { return dims_.w; }
  std::size_t channels() const { return dims_.c; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const {
    return (row * dims_.w + col) * dims_.c + ch;
  }
  float at(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_[index(row, col, ch)];
  }
  float& at(std::size_t row, std::size_t col, std::size_t ch) {
    return values_[index(row, col, ch)];
  }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  TensorMeta& meta() { return meta_; }
  const TensorMeta& meta() const { return meta_; }

  // Bitwise comparison of shape and payload; metadata is ignored.
  bool same_values(const FeatureTensor& other) const;

 private:
  Dims dims_;
  std::vector<float> values_;
  TensorMeta meta_;
};

// Throws ValueError if any element is NaN or infinite.
void check_finite(std::span<const float> values);

}  // namespace featsim
