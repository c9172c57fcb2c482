#pragma once

#include <cstdint>
#include <vector>

#include "featsim/tensor.hpp"

namespace featsim {

// Element-level availability (true = received) with the tensor's layout.
class ObservationMask {
 public:
  ObservationMask() = default;
  explicit ObservationMask(Dims dims, bool available = true)
      : dims_(dims), available_(dims.size(), available ? 1 : 0) {}

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return available_.size(); }

  bool available(std::size_t flat) const { return available_[flat] != 0; }
  bool available(std::size_t row, std::size_t col, std::size_t ch) const {
    return available_[(row * dims_.w + col) * dims_.c + ch] != 0;
  }
  void set(std::size_t flat, bool avail) { available_[flat] = avail ? 1 : 0; }
  void set(std::size_t row, std::size_t col, std::size_t ch, bool avail) {
    available_[(row * dims_.w + col) * dims_.c + ch] = avail ? 1 : 0;
  }

  std::size_t lost_count() const;
  bool operator==(const ObservationMask&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> available_;
};

}  // namespace featsim
