#include "featsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "featsim/error.hpp"
#include "featsim/metrics.hpp"
#include "featsim/npy.hpp"
#include "featsim/quantize.hpp"
#include "featsim/rng.hpp"

namespace featsim {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_string(std::uint64_t h, const std::string& s) {
  for (unsigned char ch : s) h = mix64(h ^ ch);
  return mix64(h ^ s.size());
}

std::uint64_t batch_hash(const std::vector<PreparedTensor>& batch) {
  std::uint64_t h = 0;
  for (const auto& t : batch) h = hash_string(h, t.entry.id);
  return h;
}

}  // namespace

std::vector<TensorEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image_id,tensor_file,label")
    throw FormatError("manifest header must be image_id,tensor_file,label");
  std::vector<TensorEntry> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 2) f.emplace_back();
    if (f.size() != 3) throw FormatError("manifest row needs 3 fields: " + line);
    std::filesystem::path file(f[1]);
    if (file.is_relative()) file = path.parent_path() / file;
    out.push_back({f[0], file, f[2]});
  }
  return out;
}

std::vector<TensorEntry> scan_tensor_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("tensor directory " + dir.string() + " does not exist");
  std::vector<TensorEntry> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".npy")
      out.push_back({e.path().stem().string(), e.path(), ""});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.file < b.file; });
  return out;
}

PreparedTensor prepare_tensor(const ExperimentConfig& cfg,
                              const TensorEntry& entry) {
  if (!std::filesystem::exists(entry.file))
    throw IoError("tensor '" + entry.id + "': file " + entry.file.string() +
                  " not found");
  FeatureTensor t;
  try {
    t = load_tensor(entry.file);
  } catch (const IoError& e) {
    throw IoError("tensor '" + entry.id + "': " + e.what());
  }
  t.meta().source_image_id = entry.id;
  FeatureTensor reference =
      cfg.n_bits > 0 ? dequantize(quantize(t, cfg.n_bits)) : t;
  reference.meta() = t.meta();
  const auto v = reference.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  PacketizedTensor packets = packetize(reference, cfg.packets);
  return {entry, std::move(reference), std::move(packets),
          static_cast<double>(*hi) - static_cast<double>(*lo)};
}

std::vector<PreparedTensor> prepare_batch(const ExperimentConfig& cfg) {
  const auto entries = cfg.manifest ? load_manifest(*cfg.manifest)
                                    : scan_tensor_dir(cfg.tensor_dir);
  if (entries.empty())
    throw ConfigError("no tensors found in " + cfg.tensor_dir.string());
  std::vector<PreparedTensor> batch;
  batch.reserve(entries.size());
  for (const auto& e : entries) {
    batch.push_back(prepare_tensor(cfg, e));
    if (batch.back().reference.dims() != batch.front().reference.dims())
      throw ConfigError("tensor '" + e.id + "' has dims " +
                        to_string(batch.back().reference.dims()) +
                        ", batch uses " +
                        to_string(batch.front().reference.dims()));
  }
  return batch;
}

std::filesystem::path loss_map_cache_path(const ExperimentConfig& cfg,
                                          std::size_t point_index,
                                          int realization) {
  const auto& pt = cfg.points.at(point_index);
  const std::uint64_t key = stream_key(
      cfg.seed, {point_index, static_cast<std::uint64_t>(realization),
                 std::bit_cast<std::uint64_t>(pt.pb),
                 std::bit_cast<std::uint64_t>(pt.lb)});
  char name[64];
  std::snprintf(name, sizeof(name), "p%03zu_r%03d_", point_index, realization);
  return cfg.output_dir / "lossmaps" / (name + hex64(key) + ".json");
}

CachedLossMaps load_loss_maps(const std::filesystem::path& path,
                              const std::optional<PacketGeometry>& expected) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ReplayError(std::string("loss-map cache unreadable: ") + e.what());
  }
  CachedLossMaps out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "featsim-lossmaps/1")
      throw ReplayError("unknown loss-map cache format in " + path.string());
    out.seed = j.at("seed").get<std::uint64_t>();
    out.point_index = j.at("point").at("index").get<std::size_t>();
    out.realization = j.at("realization").get<int>();
    bool first = true;
    for (const auto& e : j.at("maps")) {
      auto [map, geom] = loss_map_from_json(e.dump());
      if (first) {
        out.geometry = geom;
        first = false;
      } else if (!(geom == out.geometry)) {
        throw ReplayError("loss-map cache mixes geometries: " + path.string());
      }
      out.tensor_ids.push_back(e.at("tensor_id").get<std::string>());
      out.maps.push_back(std::move(map));
    }
    if (first) throw ReplayError("loss-map cache has no maps: " + path.string());
    if (j.at("geometry_hash").get<std::string>() != hex64(out.geometry.hash()))
      throw ReplayError("loss-map cache geometry hash mismatch: " +
                        path.string());
  } catch (const nlohmann::json::exception& e) {
    throw ReplayError("corrupt loss-map cache " + path.string() + ": " +
                      e.what());
  } catch (const FormatError& e) {
    throw ReplayError("corrupt loss-map cache " + path.string() + ": " +
                      e.what());
  } catch (const ShapeError& e) {
    throw ReplayError("corrupt loss-map cache " + path.string() + ": " +
                      e.what());
  }
  if (expected && !(*expected == out.geometry))
    throw ReplayError(
        "loss-map cache " + path.string() + " was made for dims " +
        to_string(out.geometry.dims()) +
        " r_p=" + std::to_string(out.geometry.rows_per_packet()) + " " +
        to_string(out.geometry.order()) + ", run uses dims " +
        to_string(expected->dims()) +
        " r_p=" + std::to_string(expected->rows_per_packet()) + " " +
        to_string(expected->order()));
  return out;
}

std::filesystem::path cache_loss_maps(const ExperimentConfig& cfg,
                                      std::size_t point_index, int realization,
                                      const std::vector<PreparedTensor>& batch) {
  if (batch.empty()) throw ConfigError("empty batch");
  const PacketGeometry& geom = batch.front().packets.geometry();
  auto path = loss_map_cache_path(cfg, point_index, realization);
  // The batch identity is part of the address so different tensor sets never
  // collide in one output directory.
  path.replace_filename(path.stem().string() + "_" +
                        hex64(batch_hash(batch)).substr(0, 8) + ".json");

  if (std::filesystem::exists(path)) {
    const auto cached = load_loss_maps(path, geom);
    bool ok = cached.seed == cfg.seed && cached.point_index == point_index &&
              cached.realization == realization &&
              cached.maps.size() == batch.size();
    for (std::size_t k = 0; ok && k < batch.size(); ++k)
      ok = cached.tensor_ids[k] == batch[k].entry.id;
    if (!ok)
      throw ReplayError("loss-map cache " + path.string() +
                        " does not belong to this run");
    return path;
  }

  std::vector<std::size_t> counts;
  for (const auto& t : batch) counts.push_back(t.packets.geometry().packet_count());
  const auto& pt = cfg.points.at(point_index);
  const auto maps = generate_batch({pt.kind, cfg.seed}, point_index,
                                   static_cast<std::uint64_t>(realization),
                                   counts);

  nlohmann::ordered_json j;
  j["format"] = "featsim-lossmaps/1";
  j["rng"] = kRngName;
  j["seed"] = cfg.seed;
  j["point"] = {{"index", point_index},
                {"channel", describe(pt.kind)},
                {"pb", pt.pb},
                {"lb", pt.lb}};
  j["realization"] = realization;
  j["geometry_hash"] = hex64(geom.hash());
  auto& arr = j["maps"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    auto e = nlohmann::ordered_json::parse(loss_map_to_json(maps[k], geom));
    nlohmann::ordered_json entry;
    entry["tensor_index"] = k;
    entry["tensor_id"] = batch[k].entry.id;
    entry.update(e);
    arr.push_back(std::move(entry));
  }

  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  return path;
}

Concealer::Concealer(const ExperimentConfig& cfg,
                     const std::vector<PreparedTensor>& batch) {
  const auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                               [](const auto& m) { return m.method == Method::kAltec; });
  if (it == cfg.methods.end()) return;
  if (it->altec_weights) {
    altec_ = load_altec_weights(*it->altec_weights);
    return;
  }
  std::vector<FeatureTensor> corpus;
  if (it->altec_train_dir) {
    for (const auto& e : scan_tensor_dir(*it->altec_train_dir))
      corpus.push_back(prepare_tensor(cfg, e).reference);
  } else {
    for (const auto& t : batch) corpus.push_back(t.reference);
  }
  altec_ = altec_train(corpus, cfg.packets.rows_per_packet);
}

FeatureTensor Concealer::run(const MethodConfig& method,
                             const CorruptedTensor& received,
                             const LossMap& map,
                             const PacketGeometry& geometry) const {
  const auto& t = received.tensor;
  const auto& mask = received.mask;
  const bool nothing_received = mask.lost_count() == mask.size();
  switch (method.method) {
    case Method::kNone:
      return conceal_none(t, mask);
    case Method::kSilrtc:
      return nothing_received ? t : silrtc(t, mask, method.completion);
    case Method::kHalrtc:
      return nothing_received ? t : halrtc(t, mask, method.completion);
    case Method::kAltec:
      return altec_apply(t, map, geometry, *altec_);
    case Method::kCaltec:
      return caltec(t, map, geometry);
    case Method::kNs:
      return inpaint_ns(t, mask, method.inpaint);
    case Method::kHarmonic:
      return inpaint_harmonic(t, mask, method.harmonic);
  }
  throw ParameterError("unhandled method");
}

namespace {

// Runs every method on every tensor of one (point, realization).
std::vector<RunRecord> evaluate_item(const ExperimentConfig& cfg,
                                     const std::vector<PreparedTensor>& batch,
                                     const Concealer& concealer,
                                     std::size_t point_index, int realization,
                                     std::vector<FeatureTensor>* repaired_out,
                                     std::filesystem::path* cache_out) {
  const auto t0 = Clock::now();
  const auto path = cache_loss_maps(cfg, point_index, realization, batch);
  const auto cached =
      load_loss_maps(path, batch.front().packets.geometry());
  const double ms_maps = elapsed_ms(t0) / static_cast<double>(batch.size());
  if (cache_out) *cache_out = path;

  const auto& pt = cfg.points[point_index];
  const std::string ref =
      std::filesystem::relative(path, cfg.output_dir).generic_string();
  std::vector<RunRecord> records;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& prepared = batch[k];
    const auto tc = Clock::now();
    const CorruptedTensor received = apply_loss(prepared.packets, cached.maps[k]);
    const double ms_channel = ms_maps + elapsed_ms(tc);
    for (const auto& method : cfg.methods) {
      const auto tm = Clock::now();
      FeatureTensor repaired = concealer.run(method, received, cached.maps[k],
                                             prepared.packets.geometry());
      const double ms_conceal = elapsed_ms(tm);

      RunRecord r;
      r.tensor_id = prepared.entry.id;
      r.pb = pt.pb;
      r.lb = pt.lb;
      r.realization = realization;
      r.method = to_string(method.method);
      r.mse_all = tensor_mse(repaired, prepared.reference);
      r.mse_lost = masked_mse_lost(repaired, prepared.reference, received.mask,
                                   &r.lost_elements);
      r.psnr = psnr_from_mse(r.mse_all, prepared.peak);
      r.lossmap = ref + "#" + std::to_string(k);
      r.ms_channel = cfg.record_timing ? ms_channel : 0.0;
      r.ms_conceal = cfg.record_timing ? ms_conceal : 0.0;
      r.geometry_hash = prepared.packets.geometry().hash();
      r.tensor_index = k;
      r.point_index = point_index;
      records.push_back(std::move(r));
      if (repaired_out) repaired_out->push_back(std::move(repaired));
    }
  }
  return records;
}

void write_metadata(const ExperimentConfig& cfg, std::size_t n_tensors,
                    const Dims& dims) {
  nlohmann::ordered_json j;
  j["rng"] = kRngName;
  j["seed"] = cfg.seed;
  j["tensor_dims"] = {dims.h, dims.w, dims.c};
  j["tensors"] = n_tensors;
  j["r_p"] = cfg.packets.rows_per_packet;
  j["packet_order"] = to_string(cfg.packets.order);
  j["n_bits"] = cfg.n_bits;
  j["realizations"] = cfg.realizations;
  j["ge_chain"] =
      "one chain per (point, realization) spanning all tensors of the batch; "
      "initial state drawn from the stationary distribution";
  j["trace_stream"] = "realization r starts at r * packets_per_batch";
  auto& pts = j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : cfg.points)
    pts.push_back({{"channel", describe(p.kind)}, {"pb", p.pb}, {"lb", p.lb}});
  auto& ms = j["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : cfg.methods) {
    nlohmann::ordered_json e;
    e["name"] = to_string(m.method);
    switch (m.method) {
      case Method::kSilrtc:
      case Method::kHalrtc:
        e["iterations"] = m.completion.iterations;
        e["alphas"] = m.completion.alphas;
        e["taus"] = m.completion.silrtc_taus;
        e["rho"] = m.completion.halrtc_rho;
        e["tolerance"] = m.completion.tolerance;
        e["normalization"] = "divide by max |available value|";
        break;
      case Method::kNs:
        e["dt"] = m.inpaint.dt;
        e["sweeps"] = m.inpaint.sweeps;
        e["diffusion_every"] = m.inpaint.diffusion_every;
        e["diffusion_steps"] = m.inpaint.diffusion_steps;
        break;
      case Method::kHarmonic:
        e["max_iterations"] = m.harmonic.max_iterations;
        e["tolerance"] = m.harmonic.tolerance;
        break;
      case Method::kAltec:
        e["regressors"] = "top row, bottom row, collocated channels, intercept";
        break;
      default:
        break;
    }
    ms.push_back(std::move(e));
  }
  std::ofstream out(cfg.output_dir / "metadata.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write metadata.json");
}

}  // namespace

SingleShotResult run_single_shot(const ExperimentConfig& cfg,
                                 const std::filesystem::path& tensor_file) {
  cfg.validate();
  const TensorEntry entry{tensor_file.stem().string(), tensor_file, ""};
  std::vector<PreparedTensor> batch;
  batch.push_back(prepare_tensor(cfg, entry));
  std::filesystem::create_directories(cfg.output_dir / "repaired");
  const Concealer concealer(cfg, batch);

  SingleShotResult result;
  result.records = evaluate_item(cfg, batch, concealer, 0, 0, &result.repaired,
                                 &result.lossmap_cache);
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    save_tensor(result.repaired[m],
                cfg.output_dir / "repaired" /
                    (entry.id + "_" + to_string(cfg.methods[m].method) + ".npy"));
  write_records_csv(result.records, cfg.output_dir / "records.csv",
                    /*append=*/true);
  return result;
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto batch = prepare_batch(cfg);
  std::filesystem::create_directories(cfg.output_dir / "lossmaps");
  const Concealer concealer(cfg, batch);

  struct Item {
    std::size_t point;
    int realization;
  };
  std::vector<Item> items;
  for (std::size_t p = 0; p < cfg.points.size(); ++p)
    for (int r = 0; r < cfg.realizations; ++r) items.push_back({p, r});

  std::vector<std::vector<RunRecord>> results(items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        results[i] = evaluate_item(cfg, batch, concealer, items[i].point,
                                   items[i].realization, nullptr, nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = items.size();
      }
    }
  };
  const int n_threads =
      std::min<int>(cfg.threads, static_cast<int>(items.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloResult out;
  for (auto& r : results)
    for (auto& rec : r) out.records.push_back(std::move(rec));
  out.report = aggregate(out.records);

  write_records_csv(out.records, cfg.output_dir / "records.csv");
  write_aggregate_csv(out.report, cfg.output_dir / "aggregate.csv");
  write_aggregate_json(out.report, cfg.output_dir / "aggregate.json");
  write_metadata(cfg, batch.size(), batch.front().reference.dims());
  return out;
}

}  // namespace featsim
