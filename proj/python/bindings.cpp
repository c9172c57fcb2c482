#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "featsim/channel.hpp"
#include "featsim/conceal.hpp"
#include "featsim/error.hpp"
#include "featsim/harness.hpp"
#include "featsim/metrics.hpp"
#include "featsim/npy.hpp"
#include "featsim/quantize.hpp"

namespace py = pybind11;
using namespace featsim;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

FeatureTensor to_tensor(const Array& a) {
  if (a.ndim() != 3) throw ShapeError("expected an (h, w, c) array");
  const Dims d{static_cast<std::size_t>(a.shape(0)),
               static_cast<std::size_t>(a.shape(1)),
               static_cast<std::size_t>(a.shape(2))};
  return FeatureTensor(d, std::vector<float>(a.data(), a.data() + d.size()));
}

Array to_array(const FeatureTensor& t) {
  Array out({t.height(), t.width(), t.channels()});
  std::memcpy(out.mutable_data(), t.values().data(), t.size() * sizeof(float));
  return out;
}

ObservationMask to_mask(const MaskArray& m) {
  if (m.ndim() != 3) throw ShapeError("expected an (h, w, c) mask");
  const Dims d{static_cast<std::size_t>(m.shape(0)),
               static_cast<std::size_t>(m.shape(1)),
               static_cast<std::size_t>(m.shape(2))};
  ObservationMask mask(d);
  for (std::size_t i = 0; i < d.size(); ++i) mask.set(i, m.data()[i]);
  return mask;
}

MaskArray mask_array(const ObservationMask& m) {
  const auto& d = m.dims();
  MaskArray out({d.h, d.w, d.c});
  for (std::size_t i = 0; i < m.size(); ++i) out.mutable_data()[i] = m.available(i);
  return out;
}

LossMap to_loss_map(const std::vector<bool>& lost) {
  LossMap m(lost.size());
  for (std::size_t i = 0; i < lost.size(); ++i) m.lost[i] = lost[i];
  return m;
}

std::vector<bool> from_loss_map(const LossMap& m) {
  return {m.lost.begin(), m.lost.end()};
}

PacketGeometry geometry_for(const Array& a, std::size_t rows_per_packet,
                            const std::string& order) {
  return PacketGeometry(to_tensor(a).dims(),
                        {rows_per_packet, parse_packet_order(order)});
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["tensor_id"] = r.tensor_id;
  d["pb"] = r.pb;
  d["lb"] = r.lb;
  d["realization"] = r.realization;
  d["method"] = r.method;
  d["mse_lost"] = r.mse_lost;
  d["mse_all"] = r.mse_all;
  d["psnr"] = r.psnr;
  d["lossmap"] = r.lossmap;
  d["ms_channel"] = r.ms_channel;
  d["ms_conceal"] = r.ms_conceal;
  return d;
}

}  // namespace

PYBIND11_MODULE(_featsim, m) {
  m.doc() = "Packet-loss simulation and feature-tensor concealment";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ValueError>(m, "ValueError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<LengthError>(m, "LengthError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ReplayError>(m, "ReplayError", base.ptr());
  py::register_exception<AggregationError>(m, "AggregationError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("load_tensor", [](const std::filesystem::path& p) { return to_array(load_tensor(p)); },
        py::arg("path"));
  m.def("save_tensor",
        [](const Array& a, const std::filesystem::path& p) { save_tensor(to_tensor(a), p); },
        py::arg("array"), py::arg("path"));

  m.def(
      "quantize_roundtrip",
      [](const Array& a, int n_bits) { return to_array(dequantize(quantize(to_tensor(a), n_bits))); },
      py::arg("array"), py::arg("n_bits") = 8,
      "Min-max quantize then dequantize, as the receiver sees the tensor.");

  py::class_<GEParams>(m, "GEParams")
      .def_readonly("burst_loss_prob", &GEParams::burst_loss_prob)
      .def_readonly("avg_burst_length", &GEParams::avg_burst_length)
      .def_readonly("p_bg", &GEParams::p_bg)
      .def_readonly("p_gb", &GEParams::p_gb)
      .def_readonly("p_bb", &GEParams::p_bb)
      .def_readonly("p_gg", &GEParams::p_gg);
  m.def("ge_from_pb_lb", &ge_from_pb_lb, py::arg("pb"), py::arg("lb"));
  m.def("pb_lb_from_transitions", &pb_lb_from_transitions, py::arg("p_gb"), py::arg("p_bg"));
  m.def(
      "simulate_ge",
      [](std::size_t n, double pb, double lb, std::uint64_t seed) {
        return from_loss_map(simulate_ge(n, ge_from_pb_lb(pb, lb), seed));
      },
      py::arg("n_packets"), py::arg("pb"), py::arg("lb"), py::arg("seed"));
  m.def(
      "simulate_iid",
      [](std::size_t n, double p, std::uint64_t seed) {
        return from_loss_map(simulate_iid(n, p, seed));
      },
      py::arg("n_packets"), py::arg("p_loss"), py::arg("seed"));

  m.def(
      "packet_count",
      [](const Array& a, std::size_t rp) { return geometry_for(a, rp, "channel-major").packet_count(); },
      py::arg("array"), py::arg("rows_per_packet"));
  m.def(
      "packetize_roundtrip",
      [](const Array& a, std::size_t rp, const std::string& order) {
        return to_array(depacketize(packetize(to_tensor(a), {rp, parse_packet_order(order)})));
      },
      py::arg("array"), py::arg("rows_per_packet"), py::arg("order") = "channel-major");
  m.def(
      "apply_loss",
      [](const Array& a, const std::vector<bool>& lost, std::size_t rp, const std::string& order) {
        const auto c = apply_loss(packetize(to_tensor(a), {rp, parse_packet_order(order)}),
                                  to_loss_map(lost));
        return py::make_tuple(to_array(c.tensor), mask_array(c.mask));
      },
      py::arg("array"), py::arg("lost"), py::arg("rows_per_packet"),
      py::arg("order") = "channel-major",
      "Zero-fill the lost packets. Returns (tensor, mask) with mask True where received.");

  m.def(
      "silrtc",
      [](const Array& a, const MaskArray& mask, int iterations, double tau,
         std::array<double, 3> alphas) {
        auto cfg = CompletionConfig::with_tau(tau, alphas);
        cfg.iterations = iterations;
        return to_array(silrtc(to_tensor(a), to_mask(mask), cfg));
      },
      py::arg("array"), py::arg("mask"), py::arg("iterations") = 50, py::arg("tau") = 1.0,
      py::arg("alphas") = std::array<double, 3>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  m.def(
      "halrtc",
      [](const Array& a, const MaskArray& mask, int iterations, double rho,
         std::array<double, 3> alphas) {
        CompletionConfig cfg;
        cfg.iterations = iterations;
        cfg.halrtc_rho = rho;
        cfg.alphas = alphas;
        return to_array(halrtc(to_tensor(a), to_mask(mask), cfg));
      },
      py::arg("array"), py::arg("mask"), py::arg("iterations") = 50, py::arg("rho") = 1e-2,
      py::arg("alphas") = std::array<double, 3>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  m.def(
      "caltec",
      [](const Array& a, const std::vector<bool>& lost, std::size_t rp, const std::string& order) {
        return to_array(caltec(to_tensor(a), to_loss_map(lost), geometry_for(a, rp, order)));
      },
      py::arg("array"), py::arg("lost"), py::arg("rows_per_packet"),
      py::arg("order") = "channel-major");
  m.def(
      "altec",
      [](const Array& a, const std::vector<bool>& lost, const std::vector<Array>& corpus,
         std::size_t rp, const std::string& order) {
        std::vector<FeatureTensor> train;
        for (const auto& c : corpus) train.push_back(to_tensor(c));
        const auto w = altec_train(train, rp);
        return to_array(altec_apply(to_tensor(a), to_loss_map(lost), geometry_for(a, rp, order), w));
      },
      py::arg("array"), py::arg("lost"), py::arg("corpus"), py::arg("rows_per_packet"),
      py::arg("order") = "channel-major",
      "Train ALTeC weights on `corpus`, then fill the lost packets of `array`.");
  m.def(
      "inpaint_ns",
      [](const Array& a, const MaskArray& mask, int sweeps) {
        InpaintParams p;
        p.sweeps = sweeps;
        return to_array(inpaint_ns(to_tensor(a), to_mask(mask), p));
      },
      py::arg("array"), py::arg("mask"), py::arg("sweeps") = 300);
  m.def(
      "inpaint_harmonic",
      [](const Array& a, const MaskArray& mask) {
        return to_array(inpaint_harmonic(to_tensor(a), to_mask(mask)));
      },
      py::arg("array"), py::arg("mask"));
  m.def(
      "laplace_residual",
      [](const Array& a, const MaskArray& mask) {
        return laplace_residual(to_tensor(a), to_mask(mask));
      },
      py::arg("array"), py::arg("mask"));

  m.def(
      "mse", [](const Array& a, const Array& b) { return tensor_mse(to_tensor(a), to_tensor(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "run_monte_carlo",
      [](const std::filesystem::path& config) {
        const auto res = run_monte_carlo(load_config(config));
        py::list out;
        for (const auto& r : res.records) out.append(record_dict(r));
        return out;
      },
      py::arg("config"), "Run the configured grid; returns the RunRecords as dicts.");
  m.def(
      "run_single_shot",
      [](const std::filesystem::path& config, const std::filesystem::path& tensor) {
        const auto cfg = load_config(config);
        const auto res = run_single_shot(cfg, tensor);
        py::dict repaired;
        for (std::size_t i = 0; i < res.repaired.size(); ++i)
          repaired[py::str(to_string(cfg.methods[i].method))] = to_array(res.repaired[i]);
        py::list records;
        for (const auto& r : res.records) records.append(record_dict(r));
        return py::make_tuple(repaired, records);
      },
      py::arg("config"), py::arg("tensor"));
}
