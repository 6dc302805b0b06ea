#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wpc/field.hpp"

namespace wpc::comp {

// Dense C-channel real feature stack; every channel is height x width.
struct FeatureMap {
  std::vector<RealGrid> channels;

  int channel_count() const { return static_cast<int>(channels.size()); }
  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
};

FeatureMap make_feature_map(int channels, int height, int width);
void validate(const FeatureMap& f, const char* what = "feature map");

// Gate nonlinearity used at every sigma(.) site; ReLU by default, sigmoid
// available as a config switch.
enum class GateKind { kRelu, kSigmoid };

double apply_gate(double x, GateKind kind);

// Learned-parameter stand-ins for the filtering pipeline. All matrices are
// channel-mixing (C x C) unless noted. Seeded initialization draws uniformly
// from [-1/sqrt(C), 1/sqrt(C)] with the deterministic project PRNG.
struct BranchWeights {
  int channels = 0;

  std::array<Eigen::MatrixXd, 3> theta;   // branch gates Theta_m
  std::array<Eigen::MatrixXd, 3> fusion;  // fusion mixers T_m
  Eigen::MatrixXd phi_c;                  // channel-attention mixer
  Eigen::VectorXd phi_sa;                 // spatial-attention projector (C x 1)
  Eigen::VectorXd psi_edge;               // edge projector (C x 1)
  Eigen::MatrixXd psi_sal;                // saliency mixer

  // Auxiliary depthwise 3x3 kernels H_k, one kernel per channel per k.
  std::array<std::vector<Eigen::Matrix3d>, 3> aux;

  std::array<int, 3> dilations{1, 3, 5};
  // Annular band edges as fractions of Nyquist; bands partition (0, inf):
  // lowest (0, e0*Nyq], middle (e0*Nyq, e1*Nyq], highest (e1*Nyq, inf).
  // Larger dilation <-> lower band. DC belongs to no band.
  std::array<double, 2> band_edges{0.25, 0.5};

  // Smoothing scales, pixels. sigma_branch[i] smooths branch slot i
  // (slots ordered by dilation: 1, 3, 5) inside branch_filter.
  std::array<double, 3> sigma_branch{1.0, 1.0, 1.0};
  double sigma_fuse = 1.0;
  std::array<double, 3> sigma_mfeb{1.0, 1.0, 1.0};
  double sigma_c = 1.0;
  double sigma_edge = 1.0;
  double sigma_ep = 1.0;
  double sigma_sa = 1.0;
  double sigma_mea = 1.0;
  double sigma_sal = 1.0;
  double sigma_final = 1.0;

  GateKind gate = GateKind::kRelu;
};

BranchWeights seeded_weights(int channels, uint64_t seed);
void validate(const BranchWeights& w);

struct AttentionConfig {
  double sigma_attn = 2.0;  // Gaussian window scale, pixels, > 0
  int window_radius = 6;    // aggregation truncation, >= 1
  Eigen::MatrixXd wq, wk, wv;  // C x C projections
  GateKind gate = GateKind::kRelu;
};

AttentionConfig seeded_attention(int channels, uint64_t seed);
void validate(const AttentionConfig& cfg);

// --- pipeline stages ---------------------------------------------------

// Per-channel convolution with a truncated (radius ceil(3*sigma)), unit-mass
// Gaussian kernel; zero padding at the borders.
FeatureMap gaussian_conv(const FeatureMap& f, double sigma);

// One filtering branch, m in {1,3,5} (the dilation rate):
//   1. band energy B_m = |inverse transform of the branch-annulus-masked
//      spectrum| per channel,
//   2. gate A_m = sigma(Theta_m applied across channels to B_m),
//   3. Q_m = S (.) A_m,
//   4. Gaussian smoothing of Q_m at the branch scale sigma_branch[slot],
//   5. F_m = dilated 3x3 band-pass stencil (8-neighbour Laplacian, rate m)
//      convolved depthwise with the smoothed Q_m, zero-padded.
FeatureMap branch_filter(const FeatureMap& s, int m, const BranchWeights& w);

// sigma(gaussian_conv(sum_m T_m F_m, sigma_fuse))
FeatureMap fuse_branches(const FeatureMap& f1, const FeatureMap& f3, const FeatureMap& f5,
                         const BranchWeights& w);

// Auxiliary depthwise 3x3 convolution H_k of S, k in {1,2,3}.
FeatureMap aux_conv(const FeatureMap& s, int k, const BranchWeights& w);

// F_mfeb(k) = gaussian_conv(sum_{m<=k} F_m + H_k + S, sigma_mfeb[k]).
FeatureMap mfeb_output(int k, const std::array<FeatureMap, 3>& branches, const FeatureMap& aux,
                       const FeatureMap& s, const BranchWeights& w);

// Channel gate sigma(gaussian_conv(Phi_c mixing of F, sigma_c)); output is
// the gated channel sum broadcast back over C identical channels.
FeatureMap channel_attention(const FeatureMap& mfeb, const BranchWeights& w);

// E = gaussian_conv(psi_edge . gaussian_conv(F_fused + F_ca, sigma_edge),
// sigma_ep); single channel.
FeatureMap edge_filter(const FeatureMap& fused, const FeatureMap& ca, const BranchWeights& w);

// A_sa = sigma(gaussian_conv(phi_sa . F_ca, sigma_sa)); single channel.
FeatureMap spatial_attention(const FeatureMap& ca, const BranchWeights& w);

// gaussian_conv((A_sa + sigma(E)) (.) F_ca + sum_k F_mfeb(k) + S, sigma_mea);
// the single-channel gates broadcast over the channels of F_ca.
FeatureMap mea_fusion(const FeatureMap& asa, const FeatureMap& e, const FeatureMap& ca,
                      const std::array<FeatureMap, 3>& mfeb, const FeatureMap& s,
                      const BranchWeights& w);

// gaussian_conv(Psi_sal mixing of F_mea, sigma_sal)
FeatureMap saliency_conv(const FeatureMap& mea, const BranchWeights& w);

FeatureMap upsample_nearest(const FeatureMap& f, int height, int width);

// Windowed cross-layer attention: queries from the low map, keys/values from
// the (nearest-neighbour upsampled) high map; per pair gate
// sigma(<Q(r), K(r')>/||K||_global) with a Gaussian window of scale
// sigma_attn truncated at window_radius; row-major accumulation. A zero key
// field (||K|| = 0) yields a zero output. If self_gate is non-null it
// receives the r' = r gate map (one channel).
FeatureMap cross_layer_attention(const FeatureMap& low, const FeatureMap& high,
                                 const AttentionConfig& cfg, FeatureMap* self_gate = nullptr);

// gaussian_conv(A + F_out, sigma_final)
FeatureMap final_fuse(const FeatureMap& attn, const FeatureMap& out, const BranchWeights& w);

// Named intermediate outputs in pipeline order, one per printed stage.
struct PipelineTrace {
  std::vector<std::pair<std::string, FeatureMap>> stages;
};

// Full 12-stage pipeline on a low-level and a high-level feature map.
FeatureMap run_pipeline(const FeatureMap& s_low, const FeatureMap& s_high,
                        const BranchWeights& w, const AttentionConfig& attn,
                        PipelineTrace* trace = nullptr);

// --- small helpers shared with tests ------------------------------------

FeatureMap add(const FeatureMap& a, const FeatureMap& b);
// Channel mixing: out_c = sum_c' M(c, c') in_c'.
FeatureMap mix_channels(const FeatureMap& f, const Eigen::MatrixXd& m);
double total_energy(const FeatureMap& f);  // sum of squares over all samples

}  // namespace wpc::comp
