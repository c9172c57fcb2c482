#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "featsim/packetizer.hpp"
#include "featsim/rng.hpp"

namespace featsim {

// Gilbert-Elliott two-state chain. G delivers, B drops.
struct GEParams {
  double burst_loss_prob = 0.0;     // P_B, stationary probability of B
  double avg_burst_length = 1.0;    // L_B, mean sojourn in B
  double p_bg = 1.0;
  double p_gb = 0.0;
  double p_bb = 0.0;
  double p_gg = 1.0;
};

// p_BG = 1/L_B, p_GB = P_B / (L_B (1 - P_B)), p_BB = 1 - p_BG,
// p_GG = 1 - p_GB. Throws ParameterError unless 0 <= P_B < 1, L_B >= 1 and
// p_GB <= 1.
GEParams ge_from_pb_lb(double burst_loss_prob, double avg_burst_length);
// Inverse map from the transition probabilities: L_B = 1/p_BG and
// P_B = p_GB / (p_GB + p_BG).
std::pair<double, double> pb_lb_from_transitions(double p_gb, double p_bg);

// Stateful chain. The first packet's state is drawn from the stationary
// distribution; afterwards the state carries over between generate() calls,
// so one chain can span all tensors of a batch.
class GilbertElliottChain {
 public:
  explicit GilbertElliottChain(GEParams params) : params_(params) {}

  LossMap generate(std::size_t n_packets, CounterRng& rng);
  bool started() const { return started_; }
  bool in_bad_state() const { return bad_; }

 private:
  GEParams params_;
  bool started_ = false;
  bool bad_ = false;
};

LossMap simulate_ge(std::size_t n_packets, const GEParams& params,
                    std::uint64_t seed);
// Throws ParameterError unless 0 <= p_loss <= 1.
LossMap simulate_iid(std::size_t n_packets, double p_loss, std::uint64_t seed);
LossMap simulate_iid(std::size_t n_packets, double p_loss, CounterRng& rng);

// Packet trace consumed as a stream: each take() continues where the last
// one stopped.
class TraceReader {
 public:
  // Whitespace-separated 0/1 tokens (1 = lost); lines starting with '#' are
  // comments. Throws FormatError on any other token.
  static TraceReader parse(const std::string& text);
  static TraceReader open(const std::filesystem::path& path);

  // Throws LengthError if fewer than n_packets tokens remain.
  LossMap take(std::size_t n_packets);
  void seek(std::size_t position);
  std::size_t position() const { return pos_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t remaining() const { return tokens_.size() - pos_; }

 private:
  std::vector<std::uint8_t> tokens_;
  std::size_t pos_ = 0;
};

// First n_packets entries of a trace file.
LossMap load_trace(const std::filesystem::path& path, std::size_t n_packets);
void save_trace(const LossMap& m, const std::filesystem::path& path,
                const std::string& header = "");

struct PerfectChannel {};
struct IidChannel {
  double p_loss = 0.0;
};
struct GilbertElliottChannel {
  GEParams params;
};
struct TraceChannel {
  std::filesystem::path path;
};

using ChannelKind =
    std::variant<PerfectChannel, IidChannel, GilbertElliottChannel, TraceChannel>;

struct ChannelSpec {
  ChannelKind kind;
  std::uint64_t seed = 0;
};

std::string describe(const ChannelKind& kind);

// Loss maps for every tensor of one batch in one channel realization.
// Random channels draw tensor k from stream_key(seed, {point, realization, k});
// the GE chain state carries across tensors within the realization. A trace
// is read as one stream: realization r starts at r * sum(packet_counts).
std::vector<LossMap> generate_batch(const ChannelSpec& spec,
                                    std::uint64_t point_index,
                                    std::uint64_t realization,
                                    const std::vector<std::size_t>& packet_counts);

}  // namespace featsim
