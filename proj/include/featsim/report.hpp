#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace featsim {

// One (tensor, channel point, realization, method) evaluation.
struct RunRecord {
  std::string tensor_id;
  double pb = 0.0;
  double lb = 0.0;
  int realization = 0;
  std::string method;
  double mse_lost = 0.0;
  double mse_all = 0.0;
  double psnr = 0.0;
  std::string lossmap;  // "<cache file>#<tensor index>"
  double ms_channel = 0.0;
  double ms_conceal = 0.0;

  // Not serialized. Zero means unknown (e.g. records read back from CSV).
  std::uint64_t geometry_hash = 0;
  std::size_t tensor_index = 0;
  std::size_t point_index = 0;
  std::size_t lost_elements = 0;
};

inline constexpr const char* kRecordHeader =
    "tensor_id,pb,lb,realization,method,mse_lost,mse_all,psnr,lossmap,"
    "ms_channel,ms_conceal";

// Reals use %.17g so a rerun with the same seed is byte-identical.
std::string format_record(const RunRecord& r);
void write_records_csv(std::span<const RunRecord> records,
                       const std::filesystem::path& path, bool append = false);
// Throws FormatError on a wrong header or malformed row.
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

// Sort key used to compare parallel and sequential runs.
bool record_less(const RunRecord& a, const RunRecord& b);

// Per-tensor classification flags produced by the external scoring step,
// keyed by (tensor_id, method, pb, lb, realization).
struct AccuracyEntry {
  double top1 = 0.0;
  double top5 = 0.0;
};
using AccuracyKey = std::tuple<std::string, std::string, double, double, int>;
using AccuracyTable = std::map<AccuracyKey, AccuracyEntry>;

// CSV header: tensor_id,method,pb,lb,realization,top1,top5.
AccuracyTable read_accuracy_csv(const std::filesystem::path& path);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one value
};

struct CellStats {
  std::string method;
  double pb = 0.0;
  double lb = 0.0;
  std::size_t records = 0;
  std::size_t realizations = 0;  // distinct realization indices
  MetricSummary mse_lost, mse_all, psnr;
  std::optional<double> top1, top5;  // percent
};

// Unweighted mean over the L_B cells of one (method, P_B); the standard
// deviations are taken across those cell means.
struct PbStats {
  std::string method;
  double pb = 0.0;
  std::size_t cells = 0;
  std::size_t records = 0;
  std::size_t realizations = 0;  // summed over cells
  MetricSummary mse_lost, mse_all, psnr;
  std::optional<double> top1, top5;
};

struct AggregateReport {
  std::vector<CellStats> cells;
  std::vector<PbStats> per_pb;
};

// Throws AggregationError on an empty input or when records carry different
// known geometry hashes.
AggregateReport aggregate(std::span<const RunRecord> records,
                          const AccuracyTable* accuracy = nullptr);

void write_aggregate_csv(const AggregateReport& report,
                         const std::filesystem::path& path);
void write_aggregate_json(const AggregateReport& report,
                          const std::filesystem::path& path);

}  // namespace featsim
