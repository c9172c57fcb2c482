#pragma once

#include "featsim/tensor.hpp"

namespace featsim {

class ObservationMask;

// Mean squared element difference, accumulated in double.
// Throws ShapeError on a dims mismatch.
double tensor_mse(const FeatureTensor& a, const FeatureTensor& b);

// 10*log10(peak^2 / mse); +inf when mse == 0.
double tensor_psnr(const FeatureTensor& a, const FeatureTensor& b, double peak);
double psnr_from_mse(double mse, double peak);

// MSE restricted to positions the mask marks lost. Returns 0 when nothing is
// lost; `lost_count` receives the number of positions averaged.
double masked_mse_lost(const FeatureTensor& a, const FeatureTensor& b,
                       const ObservationMask& mask, std::size_t* lost_count);

}  // namespace featsim
