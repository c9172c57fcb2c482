#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "featsim/channel.hpp"
#include "featsim/conceal.hpp"
#include "featsim/packetizer.hpp"
#include "featsim/report.hpp"
#include "featsim/tensor.hpp"

namespace featsim {

enum class RunMode { kSingleShot, kMonteCarlo };

struct TensorEntry {
  std::string id;
  std::filesystem::path file;
  std::string label;  // only consumed by the external scoring step
};

// Manifest CSV with header image_id,tensor_file,label. Relative tensor paths
// resolve against the manifest's directory.
std::vector<TensorEntry> load_manifest(const std::filesystem::path& path);
// Every *.npy in `dir`, sorted by file name, with the stem as id.
std::vector<TensorEntry> scan_tensor_dir(const std::filesystem::path& dir);

// One channel operating point of the experiment grid. pb/lb label the
// records: GE points carry (P_B, L_B); iid points carry (p, 0); the perfect
// channel is (0, 0); trace k is (-(k+1), 0).
struct ChannelPoint {
  ChannelKind kind;
  double pb = 0.0;
  double lb = 0.0;
};

struct MethodConfig {
  Method method = Method::kNone;
  CompletionConfig completion;
  InpaintParams inpaint;
  HarmonicParams harmonic;
  std::optional<std::filesystem::path> altec_weights;
  std::optional<std::filesystem::path> altec_train_dir;
};

struct ExperimentConfig {
  std::filesystem::path tensor_dir;
  std::optional<std::filesystem::path> manifest;
  PacketConfig packets;
  int n_bits = 8;  // 0 transmits raw float32 values
  std::vector<ChannelPoint> points;
  int realizations = 20;
  std::vector<MethodConfig> methods;  // canonical Method order
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  RunMode mode = RunMode::kMonteCarlo;
  int threads = 1;
  // When false, ms_channel/ms_conceal are written as 0 so that the records
  // file is byte-identical across reruns.
  bool record_timing = true;

  // Throws ConfigError on an invalid combination.
  void validate() const;
};

// Parses the TOML config. Relative paths resolve against `base_dir`. The
// SIM_SEED environment variable, when set, overrides [run].seed.
ExperimentConfig parse_config(const std::string& toml_text,
                              const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Tensors as they reach the receiver before any loss: quantized and
// dequantized (or untouched when n_bits = 0), plus their packet layout.
struct PreparedTensor {
  TensorEntry entry;
  FeatureTensor reference;
  PacketizedTensor packets;
  double peak = 0.0;  // t_max - t_min of the reference
};

PreparedTensor prepare_tensor(const ExperimentConfig& cfg,
                              const TensorEntry& entry);
// Loads every tensor of the configured source. Throws IoError naming the
// tensor id when a file is missing, ConfigError when dims differ.
std::vector<PreparedTensor> prepare_batch(const ExperimentConfig& cfg);

struct CachedLossMaps {
  std::uint64_t seed = 0;
  std::size_t point_index = 0;
  int realization = 0;
  PacketGeometry geometry;
  std::vector<std::string> tensor_ids;
  std::vector<LossMap> maps;
};

std::filesystem::path loss_map_cache_path(const ExperimentConfig& cfg,
                                          std::size_t point_index,
                                          int realization);
// Write-once cache of the loss maps of one (point, realization) for the whole
// batch. An existing file is validated and reused, never regenerated.
// Throws ReplayError when the existing file is corrupt or belongs to a
// different seed, point, realization, batch or geometry.
std::filesystem::path cache_loss_maps(const ExperimentConfig& cfg,
                                      std::size_t point_index, int realization,
                                      const std::vector<PreparedTensor>& batch);
// Throws ReplayError on a corrupt file or, when `expected` is given, a
// geometry mismatch.
CachedLossMaps load_loss_maps(
    const std::filesystem::path& path,
    const std::optional<PacketGeometry>& expected = std::nullopt);

// Holds everything the configured methods need (e.g. ALTeC weights).
class Concealer {
 public:
  // Trains or loads ALTeC weights when ALTeC is configured; `batch` is the
  // fallback training corpus when no weights file or training dir is given.
  Concealer(const ExperimentConfig& cfg,
            const std::vector<PreparedTensor>& batch);

  FeatureTensor run(const MethodConfig& method, const CorruptedTensor& received,
                    const LossMap& map, const PacketGeometry& geometry) const;
  const std::optional<AltecWeights>& altec_weights() const { return altec_; }

 private:
  std::optional<AltecWeights> altec_;
};

struct SingleShotResult {
  std::vector<FeatureTensor> repaired;  // one per configured method
  std::vector<RunRecord> records;
  std::filesystem::path lossmap_cache;
};

// One realization (first channel point, realization 0) of one tensor through
// every method. Writes repaired/<id>_<method>.npy and appends to records.csv
// under the output directory.
SingleShotResult run_single_shot(const ExperimentConfig& cfg,
                                 const std::filesystem::path& tensor_file);

struct MonteCarloResult {
  std::vector<RunRecord> records;
  AggregateReport report;
};

// Full grid. Writes records.csv, aggregate.csv, aggregate.json,
// metadata.json and lossmaps/ under the output directory.
MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg);

}  // namespace featsim
