#include <fstream>
#include <sstream>

#include <json.hpp>

#include "featsim/conceal.hpp"
#include "featsim/error.hpp"

namespace featsim {

std::size_t AltecWeights::weight_count() const {
  std::size_t n = 0;
  for (const auto& o : offsets) n += 3 + o.w_ch.size();
  return n;
}

namespace {

// Regressor layout: [top, bottom, channel 0 .. channel c-1, 1].
constexpr std::size_t kTop = 0;
constexpr std::size_t kBot = 1;
constexpr std::size_t kFirstChannel = 2;

// Fills `row` with the regressors for element (i, j) of channel ch. The
// packet containing row i starts at `packet_first`.
void regressors(const FeatureTensor& t, std::size_t i, std::size_t j,
                std::size_t ch, std::size_t packet_first, std::size_t rp,
                double* row) {
  const Dims& d = t.dims();
  row[kTop] = packet_first > 0 ? t.at(packet_first - 1, j, ch) : 0.0;
  row[kBot] = packet_first + rp < d.h ? t.at(packet_first + rp, j, ch) : 0.0;
  for (std::size_t c = 0; c < d.c; ++c)
    row[kFirstChannel + c] = c == ch ? 0.0 : t.at(i, j, c);
  row[kFirstChannel + d.c] = 1.0;
}

}  // namespace

AltecWeights altec_train(std::span<const FeatureTensor> corpus,
                         std::size_t rows_per_packet) {
  if (corpus.empty()) throw ShapeError("ALTeC training corpus is empty");
  if (rows_per_packet == 0) throw ParameterError("rows per packet must be >= 1");
  const Dims d = corpus.front().dims();
  for (const auto& t : corpus)
    if (t.dims() != d)
      throw ShapeError("ALTeC corpus mixes dims " + to_string(d) + " and " +
                       to_string(t.dims()));

  const std::size_t rp = rows_per_packet;
  const std::size_t groups = (d.h + rp - 1) / rp;
  const Eigen::Index k = static_cast<Eigen::Index>(d.c + 3);

  AltecWeights w;
  w.dims = d;
  w.rows_per_packet = rp;
  w.offsets.resize(rp);

  for (std::size_t o = 0; o < rp; ++o) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    // Samples of one tensor at this offset, accumulated through a GEMM.
    std::size_t samples = 0;
    for (std::size_t g = 0; g < groups; ++g)
      if (g * rp + o < d.h) samples += d.c * d.w;
    if (samples == 0) continue;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        design(static_cast<Eigen::Index>(samples), k);
    Eigen::VectorXd target(static_cast<Eigen::Index>(samples));

    for (const auto& t : corpus) {
      Eigen::Index r = 0;
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t i = g * rp + o;
        if (i >= d.h) continue;
        for (std::size_t ch = 0; ch < d.c; ++ch)
          for (std::size_t j = 0; j < d.w; ++j, ++r) {
            regressors(t, i, j, ch, g * rp, rp, design.row(r).data());
            target(r) = t.at(i, j, ch);
          }
      }
      gram.noalias() += design.transpose() * design;
      rhs.noalias() += design.transpose() * target;
    }

    const Eigen::VectorXd sol =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).solve(rhs);
    auto& ow = w.offsets[o];
    ow.w_top = sol(kTop);
    ow.w_bot = sol(kBot);
    ow.w_ch.assign(sol.data() + kFirstChannel, sol.data() + kFirstChannel + d.c);
    ow.bias = sol(kFirstChannel + d.c);
  }
  // Offsets that only ever fall in padding keep zero weights.
  for (auto& ow : w.offsets)
    if (ow.w_ch.empty()) ow.w_ch.assign(d.c, 0.0);
  return w;
}

FeatureTensor altec_apply(const FeatureTensor& t, const LossMap& packet_map,
                          const PacketGeometry& geometry,
                          const AltecWeights& w) {
  const Dims& d = t.dims();
  if (geometry.dims() != d || w.dims != d ||
      w.rows_per_packet != geometry.rows_per_packet() ||
      w.offsets.size() != w.rows_per_packet)
    throw ShapeError("ALTeC weights for " + to_string(w.dims) + " r_p=" +
                     std::to_string(w.rows_per_packet) +
                     " do not match tensor " + to_string(d) + " r_p=" +
                     std::to_string(geometry.rows_per_packet()));
  if (packet_map.n_packets() != geometry.packet_count())
    throw ShapeError("loss map length does not match packet geometry");

  const std::size_t rp = geometry.rows_per_packet();
  FeatureTensor out = t;
  std::vector<double> row(d.c + 3);
  for (std::size_t p = 0; p < geometry.packet_count(); ++p) {
    if (!packet_map.is_lost(p)) continue;
    const auto [ch, g] = geometry.locate(p);
    const auto [first, last] = geometry.rows(g);
    for (std::size_t i = first; i < last; ++i) {
      const auto& ow = w.offsets[i - first];
      for (std::size_t j = 0; j < d.w; ++j) {
        // Regressors come from the zero-filled input, never from values
        // predicted earlier in this loop.
        regressors(t, i, j, ch, first, rp, row.data());
        double pred = ow.w_top * row[kTop] + ow.w_bot * row[kBot] + ow.bias;
        for (std::size_t c = 0; c < d.c; ++c)
          pred += ow.w_ch[c] * row[kFirstChannel + c];
        out.at(i, j, ch) = static_cast<float>(pred);
      }
    }
  }
  return out;
}

std::string altec_weights_to_json(const AltecWeights& w) {
  nlohmann::ordered_json j;
  j["h"] = w.dims.h;
  j["w"] = w.dims.w;
  j["c"] = w.dims.c;
  j["r_p"] = w.rows_per_packet;
  auto& offs = j["offsets"] = nlohmann::ordered_json::array();
  for (const auto& o : w.offsets) {
    nlohmann::ordered_json e;
    e["w_top"] = o.w_top;
    e["w_bot"] = o.w_bot;
    e["w_ch"] = o.w_ch;
    e["bias"] = o.bias;
    offs.push_back(std::move(e));
  }
  return j.dump(1);
}

AltecWeights altec_weights_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AltecWeights w;
    w.dims = {j.at("h").get<std::size_t>(), j.at("w").get<std::size_t>(),
              j.at("c").get<std::size_t>()};
    w.rows_per_packet = j.at("r_p").get<std::size_t>();
    for (const auto& e : j.at("offsets")) {
      AltecOffsetWeights o;
      o.w_top = e.at("w_top").get<double>();
      o.w_bot = e.at("w_bot").get<double>();
      o.w_ch = e.at("w_ch").get<std::vector<double>>();
      o.bias = e.at("bias").get<double>();
      if (o.w_ch.size() != w.dims.c)
        throw FormatError("ALTeC offset has " + std::to_string(o.w_ch.size()) +
                          " channel weights, expected " +
                          std::to_string(w.dims.c));
      w.offsets.push_back(std::move(o));
    }
    if (w.offsets.size() != w.rows_per_packet)
      throw FormatError("ALTeC weights need one entry per row offset");
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed ALTeC weights: ") + e.what());
  }
}

void save_altec_weights(const AltecWeights& w,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << altec_weights_to_json(w) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

AltecWeights load_altec_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return altec_weights_from_json(ss.str());
}

}  // namespace featsim
