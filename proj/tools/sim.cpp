#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "featsim/channel.hpp"
#include "featsim/conceal.hpp"
#include "featsim/error.hpp"
#include "featsim/harness.hpp"
#include "featsim/npy.hpp"
#include "featsim/report.hpp"
#include "featsim/rng.hpp"

namespace {

using namespace featsim;

void print_summary(const std::vector<RunRecord>& records) {
  for (const auto& r : records)
    std::printf("%-10s %-9s mse_lost=%.6g mse_all=%.6g psnr=%.3f\n",
                r.tensor_id.c_str(), r.method.c_str(), r.mse_lost, r.mse_all,
                r.psnr);
}

// X[i, j, k] = a_k * (sin(fx i + phase) + cos(fy j)) + b_k.
void write_synthetic(const std::filesystem::path& dir, std::size_t n,
                     const Dims& d, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < n; ++t) {
    CounterRng rng(stream_key(seed, {t}));
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    const double fx = u(0.2, 0.8), fy = u(0.2, 0.8), phase = u(-3.0, 3.0);
    std::vector<double> a(d.c), b(d.c);
    for (std::size_t k = 0; k < d.c; ++k) {
      a[k] = u(0.5, 2.5);
      b[k] = u(-1.0, 1.0);
    }
    FeatureTensor x(d);
    for (std::size_t i = 0; i < d.h; ++i)
      for (std::size_t j = 0; j < d.w; ++j) {
        const double base = std::sin(fx * static_cast<double>(i) + phase) +
                            std::cos(fy * static_cast<double>(j));
        for (std::size_t k = 0; k < d.c; ++k)
          x.at(i, j, k) = static_cast<float>(a[k] * base + b[k]);
      }
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%03zu.npy", t);
    save_tensor(x, dir / name);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-loss simulator for split-inference feature tensors"};
  app.require_subcommand(1);

  std::string config, tensor;
  auto* single = app.add_subcommand("single-shot",
                                    "One tensor through one channel realization");
  single->add_option("--config", config, "TOML config")->required();
  single->add_option("--tensor", tensor, "NPY feature tensor")->required();

  auto* mc = app.add_subcommand("mc", "Monte Carlo over the configured grid");
  mc->add_option("--config", config, "TOML config")->required();

  auto* trace = app.add_subcommand("trace", "Packet trace tools");
  trace->require_subcommand(1);
  auto* gen = trace->add_subcommand("gen", "Write a Gilbert-Elliott loss trace");
  double pb = 0.0, lb = 1.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  gen->add_option("--pb", pb, "Burst loss probability P_B")->required();
  gen->add_option("--lb", lb, "Average burst length L_B")->required();
  gen->add_option("--n", n, "Number of packets")->required();
  gen->add_option("--seed", seed, "Master seed")->required();
  gen->add_option("--out", out, "Output trace file")->required();

  auto* agg = app.add_subcommand("aggregate", "Aggregate a RunRecord CSV");
  std::string records, accuracy, json_out;
  agg->add_option("--records", records, "RunRecord CSV")->required();
  agg->add_option("--out", out, "Aggregate CSV")->required();
  agg->add_option("--accuracy", accuracy, "Top-1/Top-5 CSV to join");
  agg->add_option("--json", json_out, "Also write the report as JSON");

  auto* altec = app.add_subcommand("altec", "ALTeC weight tools");
  altec->require_subcommand(1);
  auto* train = altec->add_subcommand("train", "Fit ALTeC weights on a tensor dir");
  std::string train_dir;
  std::size_t rows_per_packet = 8;
  train->add_option("--tensors", train_dir, "Directory of NPY tensors")->required();
  train->add_option("--rows-per-packet", rows_per_packet, "r_p")->default_val(8);
  train->add_option("--out", out, "Weights JSON")->required();

  auto* synth = app.add_subcommand(
      "synth", "Write synthetic tensors whose channels are affine in one image");
  std::size_t n_tensors = 4;
  std::vector<std::size_t> dims = {16, 16, 4};
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--n", n_tensors, "Number of tensors")->default_val(4);
  synth->add_option("--dims", dims, "h w c")->expected(3)->default_str("16 16 4");
  synth->add_option("--seed", seed, "Seed")->default_val(0);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*single) {
      const auto cfg = load_config(config);
      const auto result = run_single_shot(cfg, tensor);
      print_summary(result.records);
      std::printf("loss maps: %s\n", result.lossmap_cache.string().c_str());
    } else if (*mc) {
      const auto cfg = load_config(config);
      const auto result = run_monte_carlo(cfg);
      std::printf("%zu records, %zu cells written to %s\n",
                  result.records.size(), result.report.cells.size(),
                  cfg.output_dir.string().c_str());
    } else if (*gen) {
      const auto map = simulate_ge(n, ge_from_pb_lb(pb, lb), seed);
      save_trace(map, out,
                 "gilbert-elliott pb=" + std::to_string(pb) +
                     " lb=" + std::to_string(lb) +
                     " seed=" + std::to_string(seed));
      std::printf("%zu of %zu packets lost\n", map.lost_count(), n);
    } else if (*agg) {
      const auto recs = read_records_csv(records);
      std::optional<AccuracyTable> acc;
      if (!accuracy.empty()) acc = read_accuracy_csv(accuracy);
      const auto report = aggregate(recs, acc ? &*acc : nullptr);
      write_aggregate_csv(report, out);
      if (!json_out.empty()) write_aggregate_json(report, json_out);
    } else if (*train) {
      std::vector<FeatureTensor> corpus;
      ExperimentConfig cfg;
      cfg.n_bits = 0;
      for (const auto& e : scan_tensor_dir(train_dir))
        corpus.push_back(prepare_tensor(cfg, e).reference);
      save_altec_weights(altec_train(corpus, rows_per_packet), out);
    } else if (*synth) {
      write_synthetic(out, n_tensors, Dims{dims[0], dims[1], dims[2]}, seed);
    }
  } catch (const Error& e) {
    std::cerr << "sim: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sim: unexpected failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
