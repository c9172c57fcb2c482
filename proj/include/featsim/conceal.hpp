#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featsim/mask.hpp"
#include "featsim/packetizer.hpp"
#include "featsim/tensor.hpp"

namespace featsim {

enum class Method { kNone, kSilrtc, kHalrtc, kAltec, kCaltec, kNs, kHarmonic };

std::string to_string(Method m);
// Throws ParameterError on an unknown name.
Method parse_method(const std::string& name);

// Zero-fill baseline: lost elements keep the zeros apply_loss put there.
FeatureTensor conceal_none(const FeatureTensor& t, const ObservationMask& m);

// ---------------------------------------------------------------------------
// Low-rank tensor completion

// U * diag(max(s - tau, 0)) * V^T from the thin SVD of m.
// Throws NumericalError if m has non-finite entries or the SVD fails.
Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau);

// Mode-i matricization of an (h, w, c) array: rows index mode i, columns run
// over the remaining two modes in their original order.
Eigen::MatrixXd unfold(std::span<const double> x, const Dims& d, int mode);
void fold(const Eigen::MatrixXd& m, const Dims& d, int mode, std::span<double> x);

struct CompletionConfig {
  int iterations = 50;
  std::array<double, 3> alphas = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  // Per-mode SVT thresholds for SiLRTC, in units of the scale-normalized
  // tensor (available entries divided by their max magnitude).
  std::array<double, 3> silrtc_taus = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double halrtc_rho = 1e-2;
  // Early stop when the successive-iterate Frobenius difference drops below
  // this value; 0 disables.
  double tolerance = 0.0;

  // silrtc_taus = alphas * tau.
  static CompletionConfig with_tau(double tau,
                                   std::array<double, 3> alphas = {
                                       1.0 / 3, 1.0 / 3, 1.0 / 3});
  // Throws ParameterError on an invalid field.
  void validate() const;
};

struct CompletionStats {
  int iterations_run = 0;
  // ||X_k - X_{k-1}||_F per iteration, in the input's units.
  std::vector<double> iterate_diffs;
  // HaLRTC only: largest |Y_i| entry seen over all iterations.
  double max_abs_dual = 0.0;
};

// Throws ValueError if no element is available, ShapeError on a dims
// mismatch.
FeatureTensor silrtc(const FeatureTensor& t, const ObservationMask& m,
                     const CompletionConfig& cfg,
                     CompletionStats* stats = nullptr);
FeatureTensor halrtc(const FeatureTensor& t, const ObservationMask& m,
                     const CompletionConfig& cfg,
                     CompletionStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Packet-aware linear concealment

// Fills each lost packet from the received channel most correlated with it on
// their commonly received rows, through a least-squares affine map.
FeatureTensor caltec(const FeatureTensor& t, const LossMap& packet_map,
                     const PacketGeometry& geometry);

struct AltecOffsetWeights {
  double w_top = 0.0;
  double w_bot = 0.0;
  std::vector<double> w_ch;  // one per channel
  double bias = 0.0;
};

// Linear predictor of a packet row from the row above the packet, the row
// below it, and the collocated row of every other channel. Weights depend on
// the row offset inside the packet and are shared by all channels and
// columns.
struct AltecWeights {
  Dims dims;
  std::size_t rows_per_packet = 0;
  std::vector<AltecOffsetWeights> offsets;

  std::size_t weight_count() const;
};

// Pooled least squares over the corpus, one system per row offset; rank
// deficient systems get the minimum-norm solution. Throws ShapeError for an
// empty corpus or mixed dims, ParameterError for r_p == 0.
AltecWeights altec_train(std::span<const FeatureTensor> corpus,
                         std::size_t rows_per_packet);
// Throws ShapeError when the weights were trained for another geometry.
FeatureTensor altec_apply(const FeatureTensor& t, const LossMap& packet_map,
                          const PacketGeometry& geometry,
                          const AltecWeights& w);

std::string altec_weights_to_json(const AltecWeights& w);
AltecWeights altec_weights_from_json(const std::string& text);
void save_altec_weights(const AltecWeights& w,
                        const std::filesystem::path& path);
AltecWeights load_altec_weights(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Inpainting, every channel as an independent image

struct InpaintParams {
  double dt = 0.1;
  int sweeps = 300;
  int diffusion_every = 15;
  int diffusion_steps = 2;
};

// Onion-peel initialization followed by isophote transport of the Laplacian
// with periodic Jacobi diffusion over the missing pixels.
FeatureTensor inpaint_ns(const FeatureTensor& t, const ObservationMask& m,
                         const InpaintParams& params = {});

struct HarmonicParams {
  int max_iterations = 200000;
  // Stop once no missing pixel moves by more than this, relative to the
  // channel's received value range.
  double tolerance = 1e-11;
};

// Jacobi solution of the discrete Laplace equation on the missing pixels with
// received pixels as boundary values.
FeatureTensor inpaint_harmonic(const FeatureTensor& t, const ObservationMask& m,
                               const HarmonicParams& params = {});

// Largest |4 I(p) - sum of clamped 4-neighbours| over missing pixels p.
double laplace_residual(const FeatureTensor& t, const ObservationMask& m);

}  // namespace featsim
