#pragma once

#include <filesystem>
#include <iosfwd>

#include "featsim/tensor.hpp"

namespace featsim {

// NPY v1.0 reader/writer restricted to one dialect: little-endian float32
// ('<f4'), C order, 3-D shape (h, w, c).
//
// Errors: FormatError for a bad magic, version, header or dtype;
// ShapeError for a shape that is not 3-D with positive extents;
// ValueError for NaN/Inf in the payload; IoError when the file cannot be
// opened, is truncated, or cannot be written.
FeatureTensor load_tensor(const std::filesystem::path& path);
void save_tensor(const FeatureTensor& t, const std::filesystem::path& path);

FeatureTensor read_npy(std::istream& in);
void write_npy(const FeatureTensor& t, std::ostream& out);

}  // namespace featsim
