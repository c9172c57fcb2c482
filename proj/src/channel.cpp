#include "featsim/channel.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "featsim/error.hpp"

namespace featsim {

GEParams ge_from_pb_lb(double burst_loss_prob, double avg_burst_length) {
  if (!(burst_loss_prob >= 0.0 && burst_loss_prob < 1.0))
    throw ParameterError("P_B must lie in [0, 1), got " +
                         std::to_string(burst_loss_prob));
  if (!(avg_burst_length >= 1.0) || !std::isfinite(avg_burst_length))
    throw ParameterError("L_B must be >= 1, got " +
                         std::to_string(avg_burst_length));
  GEParams p;
  p.burst_loss_prob = burst_loss_prob;
  p.avg_burst_length = avg_burst_length;
  p.p_bg = 1.0 / avg_burst_length;
  p.p_gb = burst_loss_prob / (avg_burst_length * (1.0 - burst_loss_prob));
  if (p.p_gb > 1.0)
    throw ParameterError("inadmissible (P_B, L_B) = (" +
                         std::to_string(burst_loss_prob) + ", " +
                         std::to_string(avg_burst_length) +
                         "): p_GB = " + std::to_string(p.p_gb) + " > 1");
  p.p_bb = 1.0 - p.p_bg;
  p.p_gg = 1.0 - p.p_gb;
  return p;
}

std::pair<double, double> pb_lb_from_transitions(double p_gb, double p_bg) {
  return {p_gb / (p_gb + p_bg), 1.0 / p_bg};
}

LossMap GilbertElliottChain::generate(std::size_t n_packets, CounterRng& rng) {
  LossMap m(n_packets);
  if (n_packets == 0) return m;
  if (!started_) {
    bad_ = rng.uniform() < params_.burst_loss_prob;
    started_ = true;
  }
  for (std::size_t i = 0; i < n_packets; ++i) {
    m.lost[i] = bad_ ? 1 : 0;
    const double u = rng.uniform();
    bad_ = bad_ ? (u < params_.p_bb) : (u < params_.p_gb);
  }
  return m;
}

LossMap simulate_ge(std::size_t n_packets, const GEParams& params,
                    std::uint64_t seed) {
  CounterRng rng(stream_key(seed, {}));
  GilbertElliottChain chain(params);
  return chain.generate(n_packets, rng);
}

LossMap simulate_iid(std::size_t n_packets, double p_loss, CounterRng& rng) {
  if (!(p_loss >= 0.0 && p_loss <= 1.0))
    throw ParameterError("iid loss probability must lie in [0, 1], got " +
                         std::to_string(p_loss));
  LossMap m(n_packets);
  for (auto& v : m.lost) v = rng.uniform() < p_loss ? 1 : 0;
  return m;
}

LossMap simulate_iid(std::size_t n_packets, double p_loss, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, {}));
  return simulate_iid(n_packets, p_loss, rng);
}

TraceReader TraceReader::parse(const std::string& text) {
  TraceReader r;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      if (tok == "0") {
        r.tokens_.push_back(0);
      } else if (tok == "1") {
        r.tokens_.push_back(1);
      } else {
        throw FormatError("trace line " + std::to_string(line_no) +
                          ": token '" + tok + "' is not 0 or 1");
      }
    }
  }
  return r;
}

TraceReader TraceReader::open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

LossMap TraceReader::take(std::size_t n_packets) {
  if (remaining() < n_packets)
    throw LengthError("trace has " + std::to_string(remaining()) +
                      " packets left, " + std::to_string(n_packets) +
                      " requested");
  LossMap m;
  m.lost.assign(tokens_.begin() + static_cast<std::ptrdiff_t>(pos_),
                tokens_.begin() + static_cast<std::ptrdiff_t>(pos_ + n_packets));
  pos_ += n_packets;
  return m;
}

void TraceReader::seek(std::size_t position) {
  if (position > tokens_.size())
    throw LengthError("seek to " + std::to_string(position) +
                      " past trace end " + std::to_string(tokens_.size()));
  pos_ = position;
}

LossMap load_trace(const std::filesystem::path& path, std::size_t n_packets) {
  return TraceReader::open(path).take(n_packets);
}

void save_trace(const LossMap& m, const std::filesystem::path& path,
                const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (!header.empty()) out << "# " << header << '\n';
  for (std::size_t i = 0; i < m.lost.size(); ++i) {
    out << (m.lost[i] ? '1' : '0');
    out << ((i + 1) % 64 == 0 || i + 1 == m.lost.size() ? '\n' : ' ');
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::string describe(const ChannelKind& kind) {
  struct Visitor {
    std::string operator()(const PerfectChannel&) const { return "perfect"; }
    std::string operator()(const IidChannel& c) const {
      return "iid(p=" + std::to_string(c.p_loss) + ")";
    }
    std::string operator()(const GilbertElliottChannel& c) const {
      return "ge(P_B=" + std::to_string(c.params.burst_loss_prob) +
             ",L_B=" + std::to_string(c.params.avg_burst_length) + ")";
    }
    std::string operator()(const TraceChannel& c) const {
      return "trace(" + c.path.string() + ")";
    }
  };
  return std::visit(Visitor{}, kind);
}

std::vector<LossMap> generate_batch(
    const ChannelSpec& spec, std::uint64_t point_index,
    std::uint64_t realization, const std::vector<std::size_t>& packet_counts) {
  std::vector<LossMap> maps;
  maps.reserve(packet_counts.size());
  if (std::holds_alternative<PerfectChannel>(spec.kind)) {
    for (auto n : packet_counts) maps.emplace_back(n);
  } else if (const auto* iid = std::get_if<IidChannel>(&spec.kind)) {
    for (std::size_t k = 0; k < packet_counts.size(); ++k) {
      CounterRng rng(stream_key(spec.seed, {point_index, realization, k}));
      maps.push_back(simulate_iid(packet_counts[k], iid->p_loss, rng));
    }
  } else if (const auto* ge = std::get_if<GilbertElliottChannel>(&spec.kind)) {
    GilbertElliottChain chain(ge->params);
    for (std::size_t k = 0; k < packet_counts.size(); ++k) {
      CounterRng rng(stream_key(spec.seed, {point_index, realization, k}));
      maps.push_back(chain.generate(packet_counts[k], rng));
    }
  } else {
    const auto& trace = std::get<TraceChannel>(spec.kind);
    auto reader = TraceReader::open(trace.path);
    const std::size_t per_realization =
        std::accumulate(packet_counts.begin(), packet_counts.end(),
                        std::size_t{0});
    reader.seek(std::min(reader.size(), realization * per_realization));
    for (auto n : packet_counts) maps.push_back(reader.take(n));
  }
  return maps;
}

}  // namespace featsim
