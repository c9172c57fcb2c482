#include "featsim/packetizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "featsim/error.hpp"

namespace featsim {

std::string to_string(PacketOrder order) {
  return order == PacketOrder::kChannelMajor ? "channel-major" : "group-major";
}

PacketOrder parse_packet_order(const std::string& text) {
  if (text == "channel-major") return PacketOrder::kChannelMajor;
  if (text == "group-major") return PacketOrder::kGroupMajor;
  throw ParameterError("unknown packet order '" + text +
                       "' (expected channel-major or group-major)");
}

PacketGeometry::PacketGeometry(Dims dims, PacketConfig cfg)
    : dims_(dims), cfg_(cfg) {
  if (cfg.rows_per_packet == 0)
    throw ParameterError("rows per packet must be >= 1");
  if (dims.size() == 0) throw ShapeError("empty tensor " + to_string(dims));
  groups_ = (dims.h + cfg.rows_per_packet - 1) / cfg.rows_per_packet;
}

std::size_t PacketGeometry::packet_index(std::size_t channel,
                                         std::size_t group) const {
  return cfg_.order == PacketOrder::kChannelMajor ? channel * groups_ + group
                                                  : group * dims_.c + channel;
}

PacketLocation PacketGeometry::locate(std::size_t packet) const {
  if (cfg_.order == PacketOrder::kChannelMajor)
    return {packet / groups_, packet % groups_};
  return {packet % dims_.c, packet / dims_.c};
}

std::pair<std::size_t, std::size_t> PacketGeometry::rows(
    std::size_t group) const {
  const std::size_t first = group * cfg_.rows_per_packet;
  return {first, std::min(first + cfg_.rows_per_packet, dims_.h)};
}

std::uint64_t PacketGeometry::hash() const {
  // FNV-1a over the little-endian bytes of each field.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(dims_.h);
  mix(dims_.w);
  mix(dims_.c);
  mix(cfg_.rows_per_packet);
  mix(static_cast<std::uint64_t>(cfg_.order));
  return h;
}

PacketizedTensor::PacketizedTensor(PacketGeometry geometry,
                                   std::vector<float> payload)
    : geometry_(std::move(geometry)), payload_(std::move(payload)) {
  if (payload_.size() != geometry_.packet_count() * geometry_.packet_elements())
    throw ShapeError("packet payload of " + std::to_string(payload_.size()) +
                     " values does not match geometry");
}

std::span<const float> PacketizedTensor::packet(std::size_t p) const {
  const std::size_t n = geometry_.packet_elements();
  return std::span<const float>(payload_).subspan(p * n, n);
}

std::span<float> PacketizedTensor::packet(std::size_t p) {
  const std::size_t n = geometry_.packet_elements();
  return std::span<float>(payload_).subspan(p * n, n);
}

std::size_t LossMap::lost_count() const {
  return static_cast<std::size_t>(
      std::count_if(lost.begin(), lost.end(), [](auto v) { return v != 0; }));
}

PacketizedTensor packetize(const FeatureTensor& t, const PacketConfig& cfg) {
  PacketGeometry g(t.dims(), cfg);
  const std::size_t w = t.width();
  const std::size_t rp = g.rows_per_packet();
  std::vector<float> payload(g.packet_count() * g.packet_elements(), 0.0f);
  for (std::size_t p = 0; p < g.packet_count(); ++p) {
    const auto [ch, grp] = g.locate(p);
    const auto [first, last] = g.rows(grp);
    float* block = payload.data() + p * rp * w;
    for (std::size_t i = first; i < last; ++i)
      for (std::size_t j = 0; j < w; ++j)
        block[(i - first) * w + j] = t.at(i, j, ch);
  }
  return PacketizedTensor(std::move(g), std::move(payload));
}

namespace {

FeatureTensor reassemble(const PacketizedTensor& p, const LossMap* m) {
  const PacketGeometry& g = p.geometry();
  FeatureTensor out(g.dims());
  const std::size_t w = g.dims().w;
  for (std::size_t k = 0; k < g.packet_count(); ++k) {
    if (m && m->is_lost(k)) continue;
    const auto [ch, grp] = g.locate(k);
    const auto [first, last] = g.rows(grp);
    const auto block = p.packet(k);
    for (std::size_t i = first; i < last; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out.at(i, j, ch) = block[(i - first) * w + j];
  }
  return out;
}

}  // namespace

FeatureTensor depacketize(const PacketizedTensor& p) {
  return reassemble(p, nullptr);
}

ObservationMask element_mask(const PacketGeometry& g, const LossMap& m) {
  if (m.n_packets() != g.packet_count())
    throw ShapeError("loss map has " + std::to_string(m.n_packets()) +
                     " packets, geometry has " +
                     std::to_string(g.packet_count()));
  ObservationMask mask(g.dims(), true);
  const std::size_t w = g.dims().w;
  for (std::size_t k = 0; k < g.packet_count(); ++k) {
    if (!m.is_lost(k)) continue;
    const auto [ch, grp] = g.locate(k);
    const auto [first, last] = g.rows(grp);
    for (std::size_t i = first; i < last; ++i)
      for (std::size_t j = 0; j < w; ++j) mask.set(i, j, ch, false);
  }
  return mask;
}

CorruptedTensor apply_loss(const PacketizedTensor& p, const LossMap& m) {
  ObservationMask mask = element_mask(p.geometry(), m);
  return {reassemble(p, &m), std::move(mask)};
}

std::string loss_map_to_json(const LossMap& m, const PacketGeometry& g) {
  nlohmann::ordered_json j;
  j["n_packets"] = m.n_packets();
  auto& lost = j["lost"] = nlohmann::ordered_json::array();
  for (auto v : m.lost) lost.push_back(v ? 1 : 0);
  j["order"] = to_string(g.order());
  j["tensor_dims"] = {g.dims().h, g.dims().w, g.dims().c};
  j["r_p"] = g.rows_per_packet();
  return j.dump();
}

std::pair<LossMap, PacketGeometry> loss_map_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("loss map is not valid JSON: ") + e.what());
  }
  try {
    const auto dims = j.at("tensor_dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw FormatError("tensor_dims must have 3 entries");
    PacketGeometry g(
        {dims[0], dims[1], dims[2]},
        {j.at("r_p").get<std::size_t>(),
         parse_packet_order(j.at("order").get<std::string>())});
    const auto n = j.at("n_packets").get<std::size_t>();
    LossMap m;
    for (const auto& v : j.at("lost")) {
      const int bit = v.get<int>();
      if (bit != 0 && bit != 1)
        throw FormatError("loss map entries must be 0 or 1");
      m.lost.push_back(static_cast<std::uint8_t>(bit));
    }
    if (m.n_packets() != n)
      throw FormatError("n_packets is " + std::to_string(n) + " but lost has " +
                        std::to_string(m.n_packets()) + " entries");
    if (n != g.packet_count())
      throw ShapeError("loss map has " + std::to_string(n) +
                       " packets, its geometry implies " +
                       std::to_string(g.packet_count()));
    return {std::move(m), g};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed loss map: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("malformed loss map: ") + e.what());
  }
}

void save_loss_map(const LossMap& m, const PacketGeometry& g,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << loss_map_to_json(m, g) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::pair<LossMap, PacketGeometry> load_loss_map(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return loss_map_from_json(ss.str());
}

}  // namespace featsim
