#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "featsim/tensor.hpp"

namespace featsim::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("featsim_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline FeatureTensor random_tensor(Dims d, std::mt19937_64& gen,
                                   float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(d.size());
  for (auto& x : v) x = u(gen);
  return FeatureTensor(d, std::move(v));
}

// X[i,j,k] = a_k * base(i,j) + b_k with a smooth base image, so every channel
// is an exact affine function of every other one.
inline FeatureTensor affine_channel_tensor(Dims d, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double fx = 0.2 + 0.3 * (u(gen) + 1.0), fy = 0.2 + 0.3 * (u(gen) + 1.0);
  const double ph = 3.0 * u(gen);
  std::vector<double> a(d.c), b(d.c);
  for (std::size_t k = 0; k < d.c; ++k) {
    a[k] = 0.5 + (u(gen) + 1.0);
    b[k] = u(gen);
  }
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j) {
      const double base = std::sin(fx * static_cast<double>(i) + ph) +
                          std::cos(fy * static_cast<double>(j));
      for (std::size_t k = 0; k < d.c; ++k)
        t.at(i, j, k) = static_cast<float>(a[k] * base + b[k]);
    }
  return t;
}

}  // namespace featsim::testing
