#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "featsim/channel.hpp"
#include "featsim/conceal.hpp"
#include "featsim/error.hpp"
#include "featsim/metrics.hpp"
#include "test_util.hpp"

using namespace featsim;
using featsim::testing::TempDir;
using featsim::testing::affine_channel_tensor;
using featsim::testing::random_tensor;

namespace {

ObservationMask random_mask(const Dims& d, std::mt19937_64& gen, double p_lost) {
  std::bernoulli_distribution lost(p_lost);
  ObservationMask m(d);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, !lost(gen));
  return m;
}

FeatureTensor zero_fill(const FeatureTensor& t, const ObservationMask& m) {
  FeatureTensor out = t;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!m.available(i)) out.values()[i] = 0.0f;
  return out;
}

double max_abs_diff(const FeatureTensor& a, const FeatureTensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(double{a.values()[i]} - b.values()[i]));
  return worst;
}

double relative_lost_error(const FeatureTensor& est, const FeatureTensor& truth,
                           const ObservationMask& m) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (m.available(i)) continue;
    const double d = double{est.values()[i]} - truth.values()[i];
    num += d * d;
    den += double{truth.values()[i]} * truth.values()[i];
  }
  return std::sqrt(num / den);
}

// X[i, j, k] = u_i * V[j, k]: rank one along the row mode.
FeatureTensor mode1_rank1(Dims d, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> rows(d.h), fibre(d.w * d.c);
  for (auto& x : rows) x = u(gen);
  for (auto& x : fibre) x = u(gen);
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j)
      for (std::size_t k = 0; k < d.c; ++k)
        t.at(i, j, k) = static_cast<float>(rows[i] * fibre[j * d.c + k]);
  return t;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : {Method::kNone, Method::kSilrtc, Method::kHalrtc, Method::kAltec,
                   Method::kCaltec, Method::kNs, Method::kHarmonic})
    CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("magic"), ParameterError);
}

TEST_CASE("zero-fill baseline is a no-op") {
  std::mt19937_64 gen(1);
  const auto t = random_tensor(Dims{4, 5, 3}, gen);
  CHECK(conceal_none(t, ObservationMask(t.dims())).same_values(t));
  const auto zeros = FeatureTensor(t.dims());
  CHECK(conceal_none(zeros, ObservationMask(t.dims(), false)).same_values(zeros));
  const auto m = random_mask(t.dims(), gen, 0.3);
  const auto z = zero_fill(t, m);
  CHECK(conceal_none(z, m).same_values(z));
  CHECK_THROWS_AS(conceal_none(t, ObservationMask(Dims{1, 1, 1})), ShapeError);
}

TEST_CASE("singular value thresholding") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(7, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  CHECK((svt(m, 0.0) - m).norm() / m.norm() < 1e-6);

  Eigen::VectorXd a(6), b(4);
  for (auto& x : a) x = n(gen);
  for (auto& x : b) x = n(gen);
  a.normalize();
  b.normalize();
  const double sigma = 3.0;
  const Eigen::MatrixXd r1 = sigma * a * b.transpose();
  const Eigen::MatrixXd out = svt(r1, 1.25);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out);
  CHECK(svd.singularValues()(0) == doctest::Approx(sigma - 1.25).epsilon(1e-10));
  CHECK(svd.singularValues()(1) < 1e-10);

  CHECK(svt(r1, sigma).norm() < 1e-12);
  CHECK(svt(m, 1e6).norm() == 0.0);

  Eigen::MatrixXd bad = m;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(svt(bad, 1.0), NumericalError);
}

TEST_CASE("unfold and fold are inverse") {
  const Dims d{3, 4, 2};
  std::vector<double> x(d.size());
  std::iota(x.begin(), x.end(), 0.0);
  for (int mode = 0; mode < 3; ++mode) {
    const auto m = unfold(x, d, mode);
    std::vector<double> back(d.size(), -1.0);
    fold(m, d, mode, back);
    CHECK(back == x);
  }
  // Element (i=1, j=2, k=1) sits at flat index (1*4+2)*2+1 = 13.
  CHECK(unfold(x, d, 0)(1, 2 * 2 + 1) == 13.0);
  CHECK(unfold(x, d, 1)(2, 1 * 2 + 1) == 13.0);
  CHECK(unfold(x, d, 2)(1, 1 * 4 + 2) == 13.0);
  CHECK(unfold(x, d, 2).rows() == 2);
}

TEST_CASE("completion config validation") {
  CompletionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alphas = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = CompletionConfig::with_tau(0.3, {1.0, 0.0, 0.0});
  CHECK(cfg.silrtc_taus[0] == doctest::Approx(0.3));
  CHECK(cfg.silrtc_taus[1] == 0.0);
  cfg.halrtc_rho = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("completion leaves a fully received tensor alone") {
  std::mt19937_64 gen(3);
  const auto t = random_tensor(Dims{6, 5, 4}, gen);
  const ObservationMask all(t.dims());
  CompletionConfig cfg;
  cfg.iterations = 5;
  CHECK(silrtc(t, all, cfg).same_values(t));
  CHECK(halrtc(t, all, cfg).same_values(t));
  CHECK_THROWS_AS(silrtc(t, ObservationMask(t.dims(), false), cfg), ValueError);
  CHECK_THROWS_AS(halrtc(t, ObservationMask(Dims{1, 2, 3}), cfg), ShapeError);
}

TEST_CASE("completion keeps available entries and recovers a low-rank tensor") {
  std::mt19937_64 gen(4);
  const Dims d{16, 16, 8};
  const auto truth = mode1_rank1(d, gen);
  const auto packets = packetize(truth, {4, PacketOrder::kChannelMajor});
  // Lose one packet in each of four channels, never a whole channel.
  LossMap map(packets.geometry().packet_count());
  for (std::size_t ch : {0, 2, 5, 7}) map.lost[packets.geometry().packet_index(ch, ch % 4)] = 1;
  const auto rx = apply_loss(packets, map);

  auto cfg = CompletionConfig::with_tau(0.07, {1.0, 0.0, 0.0});
  cfg.iterations = 500;
  CompletionStats stats;
  const auto si = silrtc(rx.tensor, rx.mask, cfg, &stats);
  CHECK(stats.iterations_run == 500);
  CHECK(stats.iterate_diffs.size() == 500);
  CHECK(stats.iterate_diffs.back() < stats.iterate_diffs.front());
  CHECK(relative_lost_error(si, truth, rx.mask) < 1e-2);

  cfg.alphas = {1.0, 0.0, 0.0};
  const auto ha = halrtc(rx.tensor, rx.mask, cfg, &stats);
  CHECK(relative_lost_error(ha, truth, rx.mask) < 1e-3);
  CHECK(std::isfinite(stats.max_abs_dual));

  for (std::size_t i = 0; i < truth.size(); ++i)
    if (rx.mask.available(i)) {
      REQUIRE(si.values()[i] == truth.values()[i]);
      REQUIRE(ha.values()[i] == truth.values()[i]);
    }
}

TEST_CASE("HaLRTC duals stay bounded on random inputs") {
  std::mt19937_64 gen(5);
  CompletionConfig cfg;
  cfg.iterations = 500;
  for (int trial = 0; trial < 3; ++trial) {
    const auto t = random_tensor(Dims{8, 8, 4}, gen, -3.0f, 3.0f);
    const auto m = random_mask(t.dims(), gen, 0.3);
    CompletionStats stats;
    const auto out = halrtc(zero_fill(t, m), m, cfg, &stats);
    CHECK(std::isfinite(stats.max_abs_dual));
    CHECK(stats.max_abs_dual < 1e3);
    for (float v : out.values()) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("early stop on tolerance") {
  std::mt19937_64 gen(6);
  const auto t = mode1_rank1(Dims{8, 8, 4}, gen);
  auto m = ObservationMask(t.dims());
  m.set(3, false);
  CompletionConfig cfg;
  cfg.iterations = 1000;
  cfg.tolerance = 1e-6;
  CompletionStats stats;
  halrtc(zero_fill(t, m), m, cfg, &stats);
  CHECK(stats.iterations_run < 1000);
  CHECK(stats.iterate_diffs.back() < 1e-6);
}

TEST_CASE("CALTeC recovers an affinely dependent channel") {
  const Dims d{16, 6, 2};
  std::mt19937_64 gen(7);
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j) {
      const float x0 = std::uniform_real_distribution<float>(-2, 2)(gen);
      t.at(i, j, 0) = x0;
      t.at(i, j, 1) = 2.0f * x0 + 3.0f;
    }
  const auto p = packetize(t, {4, PacketOrder::kChannelMajor});
  LossMap map(p.geometry().packet_count());
  map.lost[p.geometry().packet_index(1, 2)] = 1;
  const auto rx = apply_loss(p, map);
  const auto out = caltec(rx.tensor, map, p.geometry());
  CHECK(max_abs_diff(out, t) < 1e-5);

  // Nothing lost: identity.
  CHECK(caltec(t, LossMap(p.geometry().packet_count()), p.geometry()).same_values(t));
}

TEST_CASE("CALTeC skips zero-variance candidates") {
  // Channel 1 is constant on the shared rows; channel 2 is a noisy affine copy.
  const Dims d{8, 4, 3};
  std::mt19937_64 gen(8);
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j) {
      const float x = std::uniform_real_distribution<float>(0, 1)(gen);
      t.at(i, j, 0) = x;
      t.at(i, j, 1) = 5.0f;
      t.at(i, j, 2) = -x + 0.01f * std::uniform_real_distribution<float>(0, 1)(gen);
    }
  const auto p = packetize(t, {2, PacketOrder::kChannelMajor});
  LossMap map(p.geometry().packet_count());
  map.lost[p.geometry().packet_index(0, 1)] = 1;
  const auto rx = apply_loss(p, map);
  const auto out = caltec(rx.tensor, map, p.geometry());
  // The constant channel would have produced 5.0 (mean fallback) or a flat
  // fill; the chosen donor reproduces the varying content.
  for (std::size_t i = 2; i < 4; ++i)
    for (std::size_t j = 0; j < d.w; ++j)
      CHECK(std::abs(out.at(i, j, 0) - t.at(i, j, 0)) < 0.02);
}

TEST_CASE("CALTeC fallback averages the collocated packets") {
  // 3 channels, 2 rows, 2 columns, r_p = 1. Channel 0 is lost entirely, so no
  // shared rows exist and every packet falls back to the donor mean.
  const Dims d{2, 2, 3};
  FeatureTensor t(d);
  const float ch1[4] = {1, 2, 3, 4};
  const float ch2[4] = {5, 8, 1, 0};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      t.at(i, j, 0) = 100.0f;
      t.at(i, j, 1) = ch1[i * 2 + j];
      t.at(i, j, 2) = ch2[i * 2 + j];
    }
  const auto p = packetize(t, {1, PacketOrder::kChannelMajor});
  LossMap map(p.geometry().packet_count());
  map.lost[p.geometry().packet_index(0, 0)] = 1;
  map.lost[p.geometry().packet_index(0, 1)] = 1;
  const auto rx = apply_loss(p, map);
  const auto out = caltec(rx.tensor, map, p.geometry());
  CHECK(out.at(0, 0, 0) == 3.0f);
  CHECK(out.at(0, 1, 0) == 5.0f);
  CHECK(out.at(1, 0, 0) == 2.0f);
  CHECK(out.at(1, 1, 0) == 2.0f);

  // Every channel lost at a group: zeros.
  LossMap all(p.geometry().packet_count(), true);
  const auto none = caltec(apply_loss(p, all).tensor, all, p.geometry());
  for (float v : none.values()) CHECK(v == 0.0f);
}

TEST_CASE("ALTeC weight count and identical-channel corpus") {
  const Dims d{12, 8, 4};
  std::mt19937_64 gen(9);
  std::vector<FeatureTensor> corpus;
  for (int n = 0; n < 5; ++n) {
    FeatureTensor t(d);
    for (std::size_t i = 0; i < d.h; ++i)
      for (std::size_t j = 0; j < d.w; ++j) {
        const float v = std::uniform_real_distribution<float>(-1, 1)(gen);
        for (std::size_t k = 0; k < d.c; ++k) t.at(i, j, k) = v;
      }
    corpus.push_back(std::move(t));
  }
  const auto w = altec_train(corpus, 4);
  CHECK(w.weight_count() == 4 * (d.c + 3));
  for (const auto& o : w.offsets) {
    const double mass = std::accumulate(o.w_ch.begin(), o.w_ch.end(), 0.0);
    // Each target sees c-1 collocated regressors, which must carry unit mass.
    CHECK(mass * (d.c - 1) / d.c == doctest::Approx(1.0).epsilon(1e-6));
  }
  double worst = 0.0;
  for (const auto& t : corpus)
    for (std::size_t i = 0; i < d.h; ++i)
      for (std::size_t j = 0; j < d.w; ++j)
        for (std::size_t ch = 0; ch < d.c; ++ch) {
          const auto& o = w.offsets[i % 4];
          const std::size_t first = i / 4 * 4;
          double pred = o.bias;
          pred += o.w_top * (first > 0 ? t.at(first - 1, j, ch) : 0.0);
          pred += o.w_bot * (first + 4 < d.h ? t.at(first + 4, j, ch) : 0.0);
          for (std::size_t c = 0; c < d.c; ++c)
            if (c != ch) pred += o.w_ch[c] * t.at(i, j, c);
          worst = std::max(worst, std::abs(pred - t.at(i, j, ch)));
        }
  CHECK(worst < 1e-8 * 10);
}

TEST_CASE("ALTeC weights satisfy the pooled normal equations") {
  // Per-channel constants admit no exact shared predictor once the missing
  // neighbour rows at the tensor edges read as zero, so check optimality:
  // the training residual is orthogonal to every regressor column.
  const Dims d{8, 4, 3};
  const std::size_t rp = 2;
  std::vector<FeatureTensor> corpus;
  std::mt19937_64 gen(10);
  for (int n = 0; n < 6; ++n) {
    FeatureTensor t(d);
    const float base = std::uniform_real_distribution<float>(-1, 1)(gen);
    for (std::size_t i = 0; i < d.h; ++i)
      for (std::size_t j = 0; j < d.w; ++j)
        for (std::size_t k = 0; k < d.c; ++k)
          t.at(i, j, k) = base * static_cast<float>(k + 1) + static_cast<float>(k);
    corpus.push_back(std::move(t));
  }
  const auto w = altec_train(corpus, rp);
  for (std::size_t o = 0; o < rp; ++o) {
    const auto& ow = w.offsets[o];
    std::vector<double> dot(d.c + 3, 0.0);
    double scale = 0.0;
    for (const auto& t : corpus)
      for (std::size_t g = 0; g * rp + o < d.h; ++g) {
        const std::size_t i = g * rp + o, first = g * rp;
        for (std::size_t ch = 0; ch < d.c; ++ch)
          for (std::size_t j = 0; j < d.w; ++j) {
            std::vector<double> x(d.c + 3, 0.0);
            x[0] = first > 0 ? t.at(first - 1, j, ch) : 0.0;
            x[1] = first + rp < d.h ? t.at(first + rp, j, ch) : 0.0;
            for (std::size_t c = 0; c < d.c; ++c)
              if (c != ch) x[2 + c] = t.at(i, j, c);
            x[2 + d.c] = 1.0;
            double pred = ow.w_top * x[0] + ow.w_bot * x[1] + ow.bias;
            for (std::size_t c = 0; c < d.c; ++c) pred += ow.w_ch[c] * x[2 + c];
            const double r = t.at(i, j, ch) - pred;
            for (std::size_t q = 0; q < x.size(); ++q) {
              dot[q] += r * x[q];
              scale = std::max(scale, std::abs(x[q]));
            }
          }
      }
    for (double v : dot) CHECK(std::abs(v) < 1e-6 * scale * 100);
  }
}

TEST_CASE("ALTeC recovers data generated by its own model") {
  // Channels X_k = a_k (B + beta) satisfy X_ch = sum_{c != ch} w_c X_c with
  // w_c = S / a_c - 1 and S = sum(a) / (c - 1), one weight set shared by all
  // channels as the model requires.
  const Dims d{16, 10, 4};
  const std::vector<double> a = {1.0, 2.0, 0.5, 1.5};
  const double s = std::accumulate(a.begin(), a.end(), 0.0) / 3.0;
  std::mt19937_64 gen(11);
  std::vector<FeatureTensor> corpus;
  for (int n = 0; n < 4; ++n) {
    FeatureTensor t(d);
    for (std::size_t i = 0; i < d.h; ++i)
      for (std::size_t j = 0; j < d.w; ++j) {
        const double b = std::uniform_real_distribution<double>(-1, 1)(gen) + 0.3;
        for (std::size_t k = 0; k < d.c; ++k) t.at(i, j, k) = static_cast<float>(a[k] * b);
      }
    corpus.push_back(std::move(t));
  }
  // The generating weights reproduce the data.
  const auto& t0 = corpus[0];
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    double pred = 0.0;
    for (std::size_t c = 0; c < d.c; ++c)
      if (c != ch) pred += (s / a[c] - 1.0) * t0.at(3, 4, c);
    CHECK(pred == doctest::Approx(t0.at(3, 4, ch)).epsilon(1e-6));
  }

  const auto w = altec_train(corpus, 4);
  const auto p = packetize(corpus[1], {4, PacketOrder::kChannelMajor});
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    LossMap map(p.geometry().packet_count());
    map.lost[p.geometry().packet_index(ch, 1)] = 1;
    const auto out = altec_apply(apply_loss(p, map).tensor, map, p.geometry(), w);
    CHECK(max_abs_diff(out, corpus[1]) < 1e-5);
  }
  // No loss: identity.
  const LossMap none(p.geometry().packet_count());
  CHECK(altec_apply(corpus[1], none, p.geometry(), w).same_values(corpus[1]));
}

TEST_CASE("ALTeC with every channel lost at a group") {
  const Dims d{8, 3, 2};
  const FeatureTensor constant(d, std::vector<float>(d.size(), 2.0f));
  std::mt19937_64 gen(12);
  std::vector<FeatureTensor> corpus = {random_tensor(d, gen), random_tensor(d, gen),
                                       random_tensor(d, gen)};
  const auto w = altec_train(corpus, 2);
  const auto p = packetize(constant, {2, PacketOrder::kChannelMajor});
  LossMap map(p.geometry().packet_count());
  for (std::size_t ch = 0; ch < 2; ++ch) map.lost[p.geometry().packet_index(ch, 1)] = 1;
  const auto out = altec_apply(apply_loss(p, map).tensor, map, p.geometry(), w);
  for (std::size_t i = 2; i < 4; ++i) {
    const auto& o = w.offsets[i - 2];
    const double expected = o.w_top * 2.0 + o.w_bot * 2.0 + o.bias;
    for (std::size_t j = 0; j < d.w; ++j)
      for (std::size_t ch = 0; ch < 2; ++ch)
        CHECK(out.at(i, j, ch) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("ALTeC weights persist and guard their geometry") {
  TempDir dir("altec");
  std::mt19937_64 gen(13);
  const Dims d{8, 4, 3};
  std::vector<FeatureTensor> corpus = {random_tensor(d, gen), random_tensor(d, gen)};
  const auto w = altec_train(corpus, 4);
  save_altec_weights(w, dir / "w.json");
  const auto back = load_altec_weights(dir / "w.json");
  CHECK(back.dims == w.dims);
  CHECK(back.rows_per_packet == 4);
  for (std::size_t o = 0; o < 4; ++o) {
    CHECK(back.offsets[o].w_ch == w.offsets[o].w_ch);
    CHECK(back.offsets[o].bias == w.offsets[o].bias);
  }
  const auto p = packetize(corpus[0], {2, PacketOrder::kChannelMajor});
  CHECK_THROWS_AS(altec_apply(corpus[0], LossMap(p.geometry().packet_count()),
                              p.geometry(), w),
                  ShapeError);
  CHECK_THROWS_AS(altec_train(std::vector<FeatureTensor>{}, 4), ShapeError);
  CHECK_THROWS_AS(altec_train(corpus, 0), ParameterError);
}

TEST_CASE("inpainting fixed points") {
  std::mt19937_64 gen(14);
  const Dims d{12, 10, 3};
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j)
      for (std::size_t k = 0; k < d.c; ++k) t.at(i, j, k) = 1.5f * static_cast<float>(k) - 2.0f;
  const auto m = random_mask(d, gen, 0.4);
  const auto rx = zero_fill(t, m);
  CHECK(inpaint_ns(rx, m).same_values(t));
  CHECK(inpaint_harmonic(rx, m).same_values(t));

  const auto r = random_tensor(d, gen);
  const ObservationMask all(d);
  CHECK(inpaint_ns(r, all).same_values(r));
  CHECK(inpaint_harmonic(r, all).same_values(r));
}

TEST_CASE("Navier-Stokes inpainting bridges a ramp across a band") {
  // The ramp runs down the rows, so it is harmonic under clamped borders and
  // a band hole should be filled by the straight line between its rims.
  const Dims d{24, 16, 1};
  FeatureTensor t(d);
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j) t.at(i, j, 0) = static_cast<float>(i);
  ObservationMask m(d);
  for (std::size_t i = 8; i < 16; ++i)
    for (std::size_t j = 0; j < d.w; ++j) m.set(i, j, 0, false);
  const auto out = inpaint_ns(zero_fill(t, m), m);
  CHECK(max_abs_diff(out, t) < 0.05 * 23.0);
  CHECK(max_abs_diff(inpaint_harmonic(zero_fill(t, m), m), t) < 1e-6);
}

TEST_CASE("harmonic inpainting solves the Laplace equation") {
  std::mt19937_64 gen(15);
  const Dims d{16, 16, 2};
  const auto t = random_tensor(d, gen);
  ObservationMask m(d);
  for (std::size_t i = 4; i < 12; ++i)
    for (std::size_t j = 0; j < d.w; ++j) m.set(i, j, 1, false);
  const auto out = inpaint_harmonic(zero_fill(t, m), m);
  CHECK(laplace_residual(out, m) < 1e-4);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (m.available(i)) REQUIRE(out.values()[i] == t.values()[i]);
  // Channel 0 had nothing missing.
  for (std::size_t i = 0; i < d.h; ++i)
    for (std::size_t j = 0; j < d.w; ++j) CHECK(out.at(i, j, 0) == t.at(i, j, 0));
}

TEST_CASE("every method beats zero-fill on affine channels") {
  std::mt19937_64 gen(16);
  const Dims d{16, 16, 4};
  std::vector<FeatureTensor> suite;
  for (int n = 0; n < 4; ++n) suite.push_back(affine_channel_tensor(d, gen));
  const auto w = altec_train(suite, 4);
  const auto ge = ge_from_pb_lb(0.3, 2.0);
  double mse_zero = 0.0, mse_cal = 0.0, mse_alt = 0.0, mse_har = 0.0;
  for (std::size_t n = 0; n < suite.size(); ++n) {
    const auto p = packetize(suite[n], {4, PacketOrder::kChannelMajor});
    const auto map = simulate_ge(p.geometry().packet_count(), ge, 100 + n);
    const auto rx = apply_loss(p, map);
    mse_zero += tensor_mse(rx.tensor, suite[n]);
    mse_cal += tensor_mse(caltec(rx.tensor, map, p.geometry()), suite[n]);
    mse_alt += tensor_mse(altec_apply(rx.tensor, map, p.geometry(), w), suite[n]);
    mse_har += tensor_mse(inpaint_harmonic(rx.tensor, rx.mask), suite[n]);
  }
  CHECK(mse_cal <= mse_zero);
  CHECK(mse_alt <= mse_zero);
  CHECK(mse_har <= mse_zero);
}
