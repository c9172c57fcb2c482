#include "featsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "featsim/error.hpp"

namespace featsim {
namespace {

// Shortest text that parses back to the same double.
std::string fmt_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw FormatError("cannot parse " + what + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("cannot parse " + what + " '" + s + "'");
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(v.size());
  if (!std::isfinite(s.mean)) {
    // An infinite PSNR (lossless case) makes the spread meaningless unless
    // every value is the same.
    const bool same = std::all_of(v.begin(), v.end(),
                                  [&](double x) { return x == v.front(); });
    s.stddev = same ? 0.0 : std::numeric_limits<double>::infinity();
    return s;
  }
  if (v.size() > 1) {
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(v.size() - 1));
  }
  return s;
}

nlohmann::ordered_json json_real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json json_summary(const MetricSummary& s) {
  return {{"mean", json_real(s.mean)}, {"stddev", json_real(s.stddev)}};
}

}  // namespace

std::string format_record(const RunRecord& r) {
  return r.tensor_id + "," + fmt_real(r.pb) + "," + fmt_real(r.lb) + "," +
         std::to_string(r.realization) + "," + r.method + "," +
         fmt_real(r.mse_lost) + "," + fmt_real(r.mse_all) + "," +
         fmt_real(r.psnr) + "," + r.lossmap + "," + fmt_ms(r.ms_channel) +
         "," + fmt_ms(r.ms_conceal);
}

void write_records_csv(std::span<const RunRecord> records,
                       const std::filesystem::path& path, bool append) {
  const bool header = !append || !std::filesystem::exists(path) ||
                      std::filesystem::file_size(path) == 0;
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (header) out << kRecordHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kRecordHeader)
    throw FormatError(path.string() + ": unexpected RunRecord header");
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 11 fields, got " + std::to_string(f.size()));
    RunRecord r;
    r.tensor_id = f[0];
    r.pb = parse_real(f[1], "pb");
    r.lb = parse_real(f[2], "lb");
    r.realization = parse_int(f[3], "realization");
    r.method = f[4];
    r.mse_lost = parse_real(f[5], "mse_lost");
    r.mse_all = parse_real(f[6], "mse_all");
    r.psnr = parse_real(f[7], "psnr");
    r.lossmap = f[8];
    r.ms_channel = parse_real(f[9], "ms_channel");
    r.ms_conceal = parse_real(f[10], "ms_conceal");
    out.push_back(std::move(r));
  }
  return out;
}

bool record_less(const RunRecord& a, const RunRecord& b) {
  return std::tie(a.tensor_id, a.pb, a.lb, a.realization, a.method) <
         std::tie(b.tensor_id, b.pb, b.lb, b.realization, b.method);
}

AccuracyTable read_accuracy_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      strip_cr(line) != "tensor_id,method,pb,lb,realization,top1,top5")
    throw FormatError(path.string() + ": unexpected accuracy header");
  AccuracyTable table;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7)
      throw FormatError(path.string() + ": accuracy rows need 7 fields");
    table[{f[0], f[1], parse_real(f[2], "pb"), parse_real(f[3], "lb"),
           parse_int(f[4], "realization")}] = {parse_real(f[5], "top1"),
                                               parse_real(f[6], "top5")};
  }
  return table;
}

AggregateReport aggregate(std::span<const RunRecord> records,
                          const AccuracyTable* accuracy) {
  if (records.empty()) throw AggregationError("no records to aggregate");
  std::uint64_t geometry = 0;
  for (const auto& r : records) {
    if (r.geometry_hash == 0) continue;
    if (geometry != 0 && r.geometry_hash != geometry)
      throw AggregationError(
          "records mix packet geometries; aggregate them separately");
    geometry = r.geometry_hash;
  }

  struct Bucket {
    std::vector<double> mse_lost, mse_all, psnr, top1, top5;
    std::set<int> realizations;
  };
  // Keyed by (method, pb, lb); std::map gives a stable output order.
  std::map<std::tuple<std::string, double, double>, Bucket> buckets;
  for (const auto& r : records) {
    auto& b = buckets[{r.method, r.pb, r.lb}];
    b.mse_lost.push_back(r.mse_lost);
    b.mse_all.push_back(r.mse_all);
    b.psnr.push_back(r.psnr);
    b.realizations.insert(r.realization);
    if (accuracy) {
      const auto it = accuracy->find(
          {r.tensor_id, r.method, r.pb, r.lb, r.realization});
      if (it != accuracy->end()) {
        b.top1.push_back(it->second.top1);
        b.top5.push_back(it->second.top5);
      }
    }
  }

  AggregateReport report;
  for (const auto& [key, b] : buckets) {
    CellStats c;
    std::tie(c.method, c.pb, c.lb) = key;
    c.records = b.mse_all.size();
    c.realizations = b.realizations.size();
    c.mse_lost = summarize(b.mse_lost);
    c.mse_all = summarize(b.mse_all);
    c.psnr = summarize(b.psnr);
    if (!b.top1.empty()) {
      c.top1 = 100.0 * summarize(b.top1).mean;
      c.top5 = 100.0 * summarize(b.top5).mean;
    }
    report.cells.push_back(std::move(c));
  }

  // Cells are already ordered by (method, pb, lb), so each (method, pb) run
  // is contiguous.
  for (std::size_t i = 0; i < report.cells.size();) {
    std::size_t j = i;
    PbStats p;
    p.method = report.cells[i].method;
    p.pb = report.cells[i].pb;
    std::vector<double> ml, ma, ps, t1, t5;
    while (j < report.cells.size() && report.cells[j].method == p.method &&
           report.cells[j].pb == p.pb) {
      const auto& c = report.cells[j];
      ++p.cells;
      p.records += c.records;
      p.realizations += c.realizations;
      ml.push_back(c.mse_lost.mean);
      ma.push_back(c.mse_all.mean);
      ps.push_back(c.psnr.mean);
      if (c.top1) {
        t1.push_back(*c.top1);
        t5.push_back(*c.top5);
      }
      ++j;
    }
    p.mse_lost = summarize(ml);
    p.mse_all = summarize(ma);
    p.psnr = summarize(ps);
    if (!t1.empty()) {
      p.top1 = summarize(t1).mean;
      p.top5 = summarize(t5).mean;
    }
    report.per_pb.push_back(std::move(p));
    i = j;
  }
  return report;
}

void write_aggregate_csv(const AggregateReport& report,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "level,method,pb,lb,records,realizations,mse_lost_mean,mse_lost_std,"
         "mse_all_mean,mse_all_std,psnr_mean,psnr_std,top1,top5\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? fmt_real(*v) : std::string();
  };
  for (const auto& c : report.cells)
    out << "cell," << c.method << ',' << fmt_real(c.pb) << ',' << fmt_real(c.lb)
        << ',' << c.records << ',' << c.realizations << ','
        << fmt_real(c.mse_lost.mean) << ',' << fmt_real(c.mse_lost.stddev)
        << ',' << fmt_real(c.mse_all.mean) << ','
        << fmt_real(c.mse_all.stddev) << ',' << fmt_real(c.psnr.mean) << ','
        << fmt_real(c.psnr.stddev) << ',' << opt(c.top1) << ',' << opt(c.top5)
        << '\n';
  for (const auto& p : report.per_pb)
    out << "pb," << p.method << ',' << fmt_real(p.pb) << ",," << p.records
        << ',' << p.realizations << ',' << fmt_real(p.mse_lost.mean) << ','
        << fmt_real(p.mse_lost.stddev) << ',' << fmt_real(p.mse_all.mean)
        << ',' << fmt_real(p.mse_all.stddev) << ',' << fmt_real(p.psnr.mean)
        << ',' << fmt_real(p.psnr.stddev) << ',' << opt(p.top1) << ','
        << opt(p.top5) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_aggregate_json(const AggregateReport& report,
                          const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json e;
    e["method"] = c.method;
    e["pb"] = c.pb;
    e["lb"] = c.lb;
    e["records"] = c.records;
    e["realizations"] = c.realizations;
    e["mse_lost"] = json_summary(c.mse_lost);
    e["mse_all"] = json_summary(c.mse_all);
    e["psnr"] = json_summary(c.psnr);
    if (c.top1) {
      e["top1"] = *c.top1;
      e["top5"] = *c.top5;
    }
    cells.push_back(std::move(e));
  }
  auto& per_pb = j["per_pb"] = nlohmann::ordered_json::array();
  for (const auto& p : report.per_pb) {
    nlohmann::ordered_json e;
    e["method"] = p.method;
    e["pb"] = p.pb;
    e["cells"] = p.cells;
    e["records"] = p.records;
    e["realizations"] = p.realizations;
    e["mse_lost"] = json_summary(p.mse_lost);
    e["mse_all"] = json_summary(p.mse_all);
    e["psnr"] = json_summary(p.psnr);
    if (p.top1) {
      e["top1"] = *p.top1;
      e["top5"] = *p.top5;
    }
    per_pb.push_back(std::move(e));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace featsim
