#include "featsim/npy.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "featsim/error.hpp"

namespace featsim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "NPY payload is read in place; big-endian hosts need a swap");

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\n");
  const auto e = s.find_last_not_of(" \t\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Value text for `key` in a Python dict literal such as
// "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 4), }".
std::string dict_value(const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos)
    throw FormatError("NPY header lacks key " + quoted);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos)
    throw FormatError("NPY header malformed near " + quoted);
  ++pos;
  std::size_t end;
  const auto first = header.find_first_not_of(' ', pos);
  if (first != std::string::npos && header[first] == '(') {
    end = header.find(')', first);
    if (end == std::string::npos) throw FormatError("NPY shape not closed");
    ++end;
  } else {
    end = header.find(',', pos);
    if (end == std::string::npos) end = header.find('}', pos);
    if (end == std::string::npos) throw FormatError("NPY header not closed");
  }
  return trim(header.substr(pos, end - pos));
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')')
    throw FormatError("NPY shape is not a tuple: " + text);
  std::vector<std::size_t> shape;
  std::stringstream ss(text.substr(1, text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw FormatError("NPY shape entry is not an integer: " + item);
    }
    if (used != item.size())
      throw FormatError("NPY shape entry is not an integer: " + item);
    shape.push_back(static_cast<std::size_t>(v));
  }
  return shape;
}

}  // namespace

FeatureTensor read_npy(std::istream& in) {
  std::array<char, 6> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw FormatError("not an NPY file (bad magic)");
  unsigned char version[2];
  if (!in.read(reinterpret_cast<char*>(version), 2))
    throw FormatError("NPY file truncated in version");
  if (version[0] != 1 || version[1] != 0)
    throw FormatError("unsupported NPY version " + std::to_string(version[0]) +
                      "." + std::to_string(version[1]));
  unsigned char len_bytes[2];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 2))
    throw FormatError("NPY file truncated in header length");
  const std::size_t header_len = len_bytes[0] | (len_bytes[1] << 8);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
    throw FormatError("NPY file truncated in header");

  const std::string descr = dict_value(header, "descr");
  if (descr != "'<f4'")
    throw FormatError("unsupported NPY dtype " + descr + ", expected '<f4'");
  if (dict_value(header, "fortran_order") != "False")
    throw FormatError("Fortran-ordered NPY arrays are not supported");
  const auto shape = parse_shape(dict_value(header, "shape"));
  if (shape.size() != 3)
    throw ShapeError("expected a 3-D array, got " +
                     std::to_string(shape.size()) + " dimensions");
  const Dims dims{shape[0], shape[1], shape[2]};
  if (dims.size() == 0) throw ShapeError("empty tensor " + to_string(dims));

  std::vector<float> values(dims.size());
  const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(values.data()), bytes))
    throw IoError("NPY payload truncated");
  return FeatureTensor(dims, std::move(values));
}

void write_npy(const FeatureTensor& t, std::ostream& out) {
  const Dims& d = t.dims();
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(d.h) + ", " + std::to_string(d.w) +
                       ", " + std::to_string(d.c) + "), }";
  // Pad with spaces so the payload starts on a 64-byte boundary; the header
  // always ends in a newline.
  const std::size_t prefix = kMagic.size() + 2 + 2;
  const std::size_t total = prefix + header.size() + 1;
  header.append((kAlign - total % kAlign) % kAlign, ' ');
  header.push_back('\n');

  out.write(kMagic.data(), kMagic.size());
  const char version[2] = {1, 0};
  out.write(version, 2);
  const char len[2] = {static_cast<char>(header.size() & 0xff),
                       static_cast<char>((header.size() >> 8) & 0xff)};
  out.write(len, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto v = t.values();
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

FeatureTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_npy(in);
}

void save_tensor(const FeatureTensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_npy(t, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace featsim
