#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "featsim/mask.hpp"
#include "featsim/tensor.hpp"

namespace featsim {

// Wire order of packets. Channel-major numbers packets p = channel*G + group;
// group-major numbers them p = group*c + channel.
enum class PacketOrder { kChannelMajor, kGroupMajor };

std::string to_string(PacketOrder order);
// Accepts "channel-major" / "group-major"; throws ParameterError otherwise.
PacketOrder parse_packet_order(const std::string& text);

struct PacketConfig {
  std::size_t rows_per_packet = 8;
  PacketOrder order = PacketOrder::kChannelMajor;
  bool operator==(const PacketConfig&) const = default;
};

struct PacketLocation {
  std::size_t channel;
  std::size_t group;
  bool operator==(const PacketLocation&) const = default;
};

// Packet layout of one tensor: each channel is cut into G = ceil(h / r_p)
// row groups, the last of which is zero-padded to r_p rows.
class PacketGeometry {
 public:
  PacketGeometry() = default;
  // Throws ParameterError if rows_per_packet == 0.
  PacketGeometry(Dims dims, PacketConfig cfg);

  const Dims& dims() const { return dims_; }
  std::size_t rows_per_packet() const { return cfg_.rows_per_packet; }
  PacketOrder order() const { return cfg_.order; }
  std::size_t groups_per_channel() const { return groups_; }
  std::size_t pad_rows() const { return groups_ * cfg_.rows_per_packet - dims_.h; }
  std::size_t packet_count() const { return groups_ * dims_.c; }
  std::size_t packet_elements() const { return cfg_.rows_per_packet * dims_.w; }

  std::size_t packet_index(std::size_t channel, std::size_t group) const;
  PacketLocation locate(std::size_t packet) const;
  // First real row of a group and one past its last real row (padding
  // excluded).
  std::pair<std::size_t, std::size_t> rows(std::size_t group) const;

  // Stable digest of (dims, r_p, order) for cache validation.
  std::uint64_t hash() const;

  bool operator==(const PacketGeometry&) const = default;

 private:
  Dims dims_;
  PacketConfig cfg_;
  std::size_t groups_ = 0;
};

class PacketizedTensor {
 public:
  PacketizedTensor(PacketGeometry geometry, std::vector<float> payload);

  const PacketGeometry& geometry() const { return geometry_; }
  // r_p x w block of packet p in wire order, row-major.
  std::span<const float> packet(std::size_t p) const;
  std::span<float> packet(std::size_t p);

 private:
  PacketGeometry geometry_;
  std::vector<float> payload_;
};

// Per-packet record of one channel realization; lost[p] != 0 means packet p
// (wire order) never arrived.
struct LossMap {
  std::vector<std::uint8_t> lost;

  LossMap() = default;
  explicit LossMap(std::size_t n_packets, bool all_lost = false)
      : lost(n_packets, all_lost ? 1 : 0) {}

  std::size_t n_packets() const { return lost.size(); }
  bool is_lost(std::size_t p) const { return lost[p] != 0; }
  std::size_t lost_count() const;
  bool operator==(const LossMap&) const = default;
};

struct CorruptedTensor {
  FeatureTensor tensor;  // lost elements set to zero
  ObservationMask mask;  // true where the element was received
};

PacketizedTensor packetize(const FeatureTensor& t, const PacketConfig& cfg);
// Strips padding. Throws ShapeError if the payload size disagrees with the
// geometry.
FeatureTensor depacketize(const PacketizedTensor& p);
// Zero-fills every lost packet and reassembles. Throws ShapeError if the map
// length differs from the packet count.
CorruptedTensor apply_loss(const PacketizedTensor& p, const LossMap& m);
// Element mask implied by a loss map, without touching any data.
ObservationMask element_mask(const PacketGeometry& g, const LossMap& m);

// Loss-map JSON: {"n_packets", "lost": [0/1...], "order", "tensor_dims", "r_p"}.
std::string loss_map_to_json(const LossMap& m, const PacketGeometry& g);
// Throws FormatError on malformed JSON or fields, ShapeError when n_packets
// disagrees with the geometry it declares.
std::pair<LossMap, PacketGeometry> loss_map_from_json(const std::string& text);
void save_loss_map(const LossMap& m, const PacketGeometry& g,
                   const std::filesystem::path& path);
std::pair<LossMap, PacketGeometry> load_loss_map(
    const std::filesystem::path& path);

}  // namespace featsim
