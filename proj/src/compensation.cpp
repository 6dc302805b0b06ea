#include "wpc/compensation.hpp"

#include <cmath>
#include <string>

#include "wpc/rng.hpp"

namespace wpc::comp {

namespace {

void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* op,
                        bool channels_too = true) {
  if (a.height() != b.height() || a.width() != b.width() ||
      (channels_too && a.channel_count() != b.channel_count())) {
    fail(errc::shape_mismatch, std::string(op) + ": feature map shapes differ");
  }
}

RealGrid convolve_real(const RealGrid& in, const RealGrid& kernel, int dilation = 1) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int kr = static_cast<int>(kernel.rows()) / 2;
  const int kc = static_cast<int>(kernel.cols()) / 2;
  RealGrid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int dy = -kr; dy <= kr; ++dy) {
        const int rr = r - dy * dilation;
        if (rr < 0 || rr >= h) continue;
        for (int dx = -kc; dx <= kc; ++dx) {
          const int cc = c - dx * dilation;
          if (cc < 0 || cc >= w) continue;
          acc += kernel(dy + kr, dx + kc) * in(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

// Zero-sum 8-neighbour Laplacian band-pass stencil, center-normalized.
RealGrid bandpass_stencil() {
  RealGrid g(3, 3);
  g << -1, -1, -1, -1, 8, -1, -1, -1, -1;
  return g / 8.0;
}

int branch_slot(int m, const BranchWeights& w) {
  for (int i = 0; i < 3; ++i) {
    if (w.dilations[static_cast<size_t>(i)] == m) return i;
  }
  fail(errc::invalid_argument,
       "branch_filter: dilation " + std::to_string(m) + " is not a configured branch");
}

FeatureMap gate_map(const FeatureMap& f, GateKind kind) {
  FeatureMap out = f;
  for (auto& ch : out.channels) {
    ch = ch.unaryExpr([kind](double x) { return apply_gate(x, kind); });
  }
  return out;
}

Eigen::MatrixXd seeded_matrix(int rows, int cols, double bound, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

FeatureMap make_feature_map(int channels, int height, int width) {
  if (channels < 1 || height < 1 || width < 1) {
    fail(errc::invalid_argument, "make_feature_map: dimensions must be >= 1");
  }
  FeatureMap f;
  f.channels.assign(static_cast<size_t>(channels), RealGrid::Zero(height, width));
  return f;
}

void validate(const FeatureMap& f, const char* what) {
  if (f.channels.empty()) fail(errc::invalid_argument, std::string(what) + ": no channels");
  const Eigen::Index h = f.channels[0].rows();
  const Eigen::Index w = f.channels[0].cols();
  if (h < 1 || w < 1) fail(errc::invalid_argument, std::string(what) + ": empty channel");
  for (const auto& ch : f.channels) {
    if (ch.rows() != h || ch.cols() != w) {
      fail(errc::shape_mismatch, std::string(what) + ": ragged channels");
    }
    if (!all_finite(ch)) fail(errc::non_finite, std::string(what) + ": non-finite sample");
  }
}

double apply_gate(double x, GateKind kind) {
  if (kind == GateKind::kRelu) return x > 0.0 ? x : 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

BranchWeights seeded_weights(int channels, uint64_t seed) {
  if (channels < 1) fail(errc::invalid_argument, "seeded_weights: channels must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  Rng rng(seed);
  BranchWeights w;
  w.channels = channels;
  for (int i = 0; i < 3; ++i) {
    w.theta[static_cast<size_t>(i)] = seeded_matrix(channels, channels, bound, rng);
  }
  for (int i = 0; i < 3; ++i) {
    w.fusion[static_cast<size_t>(i)] = seeded_matrix(channels, channels, bound, rng);
  }
  w.phi_c = seeded_matrix(channels, channels, bound, rng);
  w.phi_sa = seeded_matrix(channels, 1, bound, rng);
  w.psi_edge = seeded_matrix(channels, 1, bound, rng);
  w.psi_sal = seeded_matrix(channels, channels, bound, rng);
  for (int k = 0; k < 3; ++k) {
    w.aux[static_cast<size_t>(k)].resize(static_cast<size_t>(channels));
    for (int c = 0; c < channels; ++c) {
      w.aux[static_cast<size_t>(k)][static_cast<size_t>(c)] =
          seeded_matrix(3, 3, bound, rng);
    }
  }
  return w;
}

void validate(const BranchWeights& w) {
  if (w.channels < 1) fail(errc::config_error, "weights: channels must be >= 1");
  const int c = w.channels;
  auto check = [c](const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != c || m.cols() != c) {
      fail(errc::config_error, std::string("weights: tensor '") + name + "' must be CxC");
    }
  };
  check(w.theta[0], "theta_1");
  check(w.theta[1], "theta_3");
  check(w.theta[2], "theta_5");
  check(w.fusion[0], "fusion_1");
  check(w.fusion[1], "fusion_3");
  check(w.fusion[2], "fusion_5");
  check(w.phi_c, "phi_c");
  check(w.psi_sal, "psi_sal");
  if (w.phi_sa.size() != c) fail(errc::config_error, "weights: tensor 'phi_sa' must be Cx1");
  if (w.psi_edge.size() != c) fail(errc::config_error, "weights: tensor 'psi_edge' must be Cx1");
  for (int k = 0; k < 3; ++k) {
    if (static_cast<int>(w.aux[static_cast<size_t>(k)].size()) != c) {
      fail(errc::config_error,
           "weights: tensor 'aux_" + std::to_string(k + 1) + "' must hold C 3x3 kernels");
    }
  }
  if (!(w.band_edges[0] > 0.0 && w.band_edges[0] < w.band_edges[1] && w.band_edges[1] <= 1.0)) {
    fail(errc::config_error, "weights: band edges must satisfy 0 < e0 < e1 <= 1");
  }
  auto positive = [](double s, const char* name) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(errc::config_error, std::string("weights: sigma '") + name + "' must be > 0");
    }
  };
  for (double s : w.sigma_branch) positive(s, "branch");
  for (double s : w.sigma_mfeb) positive(s, "mfeb");
  positive(w.sigma_fuse, "fuse");
  positive(w.sigma_c, "c");
  positive(w.sigma_edge, "edge");
  positive(w.sigma_ep, "ep");
  positive(w.sigma_sa, "sa");
  positive(w.sigma_mea, "mea");
  positive(w.sigma_sal, "sal");
  positive(w.sigma_final, "final");
}

AttentionConfig seeded_attention(int channels, uint64_t seed) {
  if (channels < 1) fail(errc::invalid_argument, "seeded_attention: channels must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  Rng rng(seed);
  AttentionConfig cfg;
  cfg.wq = seeded_matrix(channels, channels, bound, rng);
  cfg.wk = seeded_matrix(channels, channels, bound, rng);
  cfg.wv = seeded_matrix(channels, channels, bound, rng);
  return cfg;
}

void validate(const AttentionConfig& cfg) {
  if (!(cfg.sigma_attn > 0.0) || !std::isfinite(cfg.sigma_attn)) {
    fail(errc::config_error, "attention: sigma_attn must be finite and > 0");
  }
  if (cfg.window_radius < 1) fail(errc::config_error, "attention: window_radius must be >= 1");
  const Eigen::Index c = cfg.wq.rows();
  if (c < 1 || cfg.wq.cols() != c || cfg.wk.rows() != c || cfg.wk.cols() != c ||
      cfg.wv.rows() != c || cfg.wv.cols() != c) {
    fail(errc::config_error, "attention: wq/wk/wv must be square and same size");
  }
}

FeatureMap gaussian_conv(const FeatureMap& f, double sigma) {
  validate(f, "gaussian_conv");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(errc::invalid_argument, "gaussian_conv: sigma must be finite and > 0");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  // Unit-mass separable kernel: normalized 1-D factors multiply to the
  // normalized 2-D truncated Gaussian exactly.
  Eigen::ArrayXd k1(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d) {
    k1(d + radius) = std::exp(-static_cast<double>(d) * d / (2.0 * sigma * sigma));
  }
  k1 /= k1.sum();
  RealGrid krow(1, 2 * radius + 1);
  RealGrid kcol(2 * radius + 1, 1);
  for (int i = 0; i < 2 * radius + 1; ++i) {
    krow(0, i) = k1(i);
    kcol(i, 0) = k1(i);
  }
  FeatureMap out = f;
  for (auto& ch : out.channels) {
    ch = convolve_real(convolve_real(ch, krow), kcol);
  }
  return out;
}

FeatureMap mix_channels(const FeatureMap& f, const Eigen::MatrixXd& m) {
  validate(f, "mix_channels");
  if (m.cols() != f.channel_count()) {
    fail(errc::shape_mismatch, "mix_channels: matrix columns must match channel count");
  }
  FeatureMap out;
  out.channels.assign(static_cast<size_t>(m.rows()),
                      RealGrid::Zero(f.height(), f.width()));
  for (int oc = 0; oc < m.rows(); ++oc) {
    for (int ic = 0; ic < m.cols(); ++ic) {
      out.channels[static_cast<size_t>(oc)] +=
          m(oc, ic) * f.channels[static_cast<size_t>(ic)];
    }
  }
  return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
  // Single-channel maps broadcast over the channels of the other operand.
  require_same_shape(a, b, "add", /*channels_too=*/false);
  if (a.channel_count() == b.channel_count()) {
    FeatureMap out = a;
    for (size_t c = 0; c < out.channels.size(); ++c) out.channels[c] += b.channels[c];
    return out;
  }
  if (b.channel_count() == 1) {
    FeatureMap out = a;
    for (auto& ch : out.channels) ch += b.channels[0];
    return out;
  }
  if (a.channel_count() == 1) return add(b, a);
  fail(errc::shape_mismatch, "add: channel counts are incompatible");
}

double total_energy(const FeatureMap& f) {
  double e = 0.0;
  for (const auto& ch : f.channels) e += ch.square().sum();
  return e;
}

FeatureMap branch_filter(const FeatureMap& s, int m, const BranchWeights& w) {
  validate(s, "branch_filter");
  validate(w);
  if (s.channel_count() != w.channels) {
    fail(errc::shape_mismatch, "branch_filter: input channels do not match weights");
  }
  if (s.height() < 2 || s.width() < 2) {
    fail(errc::invalid_argument, "branch_filter: spatial dimensions must be >= 2");
  }
  const int slot = branch_slot(m, w);

  // Annulus for this branch on the unit-pitch frequency grid. Slot 0
  // (dilation 1) takes the highest band; the top band is unbounded above so
  // corner frequencies beyond Nyquist radius stay covered.
  const double nyquist = 0.5;
  const double inner_edges[3] = {w.band_edges[1] * nyquist, w.band_edges[0] * nyquist, 0.0};
  const double outer_edges[3] = {std::numeric_limits<double>::infinity(),
                                 w.band_edges[1] * nyquist, w.band_edges[0] * nyquist};
  const double lo = inner_edges[slot];
  const double hi = outer_edges[slot];

  const FrequencyGrid grid = frequency_grid(s.width(), s.height(), 1.0);
  const RealGrid nsq = grid.norm_squared();

  // 1. band energy per channel: magnitude of the annulus-masked inverse
  // transform.
  FeatureMap band = s;
  for (auto& ch : band.channels) {
    ComplexField cf = from_real(ch, 1.0);
    ComplexField spec = forward_spectrum(cf);
    for (Eigen::Index cc = 0; cc < spec.data.cols(); ++cc) {
      for (Eigen::Index rr = 0; rr < spec.data.rows(); ++rr) {
        const double radius = std::sqrt(nsq(rr, cc));
        const bool in_band = radius > lo && radius <= hi;
        if (!in_band) spec.data(rr, cc) = Complex(0.0, 0.0);
      }
    }
    ch = inverse_spectrum(spec).data.abs();
  }

  // 2. gate across channels, 3. pointwise modulation, 4. per-branch Gaussian
  // smoothing at sigma_branch[slot], 5. dilated stencil.
  const FeatureMap gated = gate_map(mix_channels(band, w.theta[static_cast<size_t>(slot)]), w.gate);
  FeatureMap q = s;
  for (size_t c = 0; c < q.channels.size(); ++c) {
    q.channels[c] = s.channels[c] * gated.channels[c];
  }
  const FeatureMap smoothed = gaussian_conv(q, w.sigma_branch[static_cast<size_t>(slot)]);
  FeatureMap out = s;
  const RealGrid stencil = bandpass_stencil();
  for (size_t c = 0; c < out.channels.size(); ++c) {
    out.channels[c] = convolve_real(smoothed.channels[c], stencil, m);
  }
  return out;
}

FeatureMap fuse_branches(const FeatureMap& f1, const FeatureMap& f3, const FeatureMap& f5,
                         const BranchWeights& w) {
  validate(f1, "fuse_branches");
  require_same_shape(f1, f3, "fuse_branches");
  require_same_shape(f1, f5, "fuse_branches");
  validate(w);
  FeatureMap sum = mix_channels(f1, w.fusion[0]);
  sum = add(sum, mix_channels(f3, w.fusion[1]));
  sum = add(sum, mix_channels(f5, w.fusion[2]));
  return gate_map(gaussian_conv(sum, w.sigma_fuse), w.gate);
}

FeatureMap aux_conv(const FeatureMap& s, int k, const BranchWeights& w) {
  validate(s, "aux_conv");
  validate(w);
  if (k < 1 || k > 3) fail(errc::invalid_argument, "aux_conv: k must be in {1,2,3}");
  if (s.channel_count() != w.channels) {
    fail(errc::shape_mismatch, "aux_conv: input channels do not match weights");
  }
  FeatureMap out = s;
  const auto& kernels = w.aux[static_cast<size_t>(k - 1)];
  for (size_t c = 0; c < out.channels.size(); ++c) {
    out.channels[c] = convolve_real(s.channels[c], kernels[c].array());
  }
  return out;
}

FeatureMap mfeb_output(int k, const std::array<FeatureMap, 3>& branches, const FeatureMap& aux,
                       const FeatureMap& s, const BranchWeights& w) {
  if (k < 1 || k > 3) fail(errc::invalid_argument, "mfeb_output: k must be in {1,2,3}");
  validate(s, "mfeb_output");
  validate(w);
  FeatureMap acc = branches[0];
  for (int i = 1; i < k; ++i) acc = add(acc, branches[static_cast<size_t>(i)]);
  acc = add(acc, aux);
  acc = add(acc, s);
  return gaussian_conv(acc, w.sigma_mfeb[static_cast<size_t>(k - 1)]);
}

FeatureMap channel_attention(const FeatureMap& mfeb, const BranchWeights& w) {
  validate(mfeb, "channel_attention");
  validate(w);
  const FeatureMap gate =
      gate_map(gaussian_conv(mix_channels(mfeb, w.phi_c), w.sigma_c), w.gate);
  RealGrid sum = RealGrid::Zero(mfeb.height(), mfeb.width());
  for (size_t c = 0; c < mfeb.channels.size(); ++c) {
    sum += gate.channels[c] * mfeb.channels[c];
  }
  // Broadcast the gated channel sum back over C identical channels so the
  // downstream C x 1 projections and channelwise products stay well-formed.
  FeatureMap out;
  out.channels.assign(mfeb.channels.size(), sum);
  return out;
}

FeatureMap edge_filter(const FeatureMap& fused, const FeatureMap& ca, const BranchWeights& w) {
  validate(fused, "edge_filter");
  validate(ca, "edge_filter");
  validate(w);
  const FeatureMap inner = gaussian_conv(add(fused, ca), w.sigma_edge);
  const FeatureMap projected = mix_channels(inner, w.psi_edge.transpose());
  return gaussian_conv(projected, w.sigma_ep);
}

FeatureMap spatial_attention(const FeatureMap& ca, const BranchWeights& w) {
  validate(ca, "spatial_attention");
  validate(w);
  const FeatureMap projected = mix_channels(ca, w.phi_sa.transpose());
  return gate_map(gaussian_conv(projected, w.sigma_sa), w.gate);
}

FeatureMap mea_fusion(const FeatureMap& asa, const FeatureMap& e, const FeatureMap& ca,
                      const std::array<FeatureMap, 3>& mfeb, const FeatureMap& s,
                      const BranchWeights& w) {
  validate(asa, "mea_fusion");
  validate(e, "mea_fusion");
  validate(ca, "mea_fusion");
  validate(s, "mea_fusion");
  validate(w);
  if (asa.channel_count() != 1 || e.channel_count() != 1) {
    fail(errc::shape_mismatch, "mea_fusion: gate maps must be single-channel");
  }
  const RealGrid gate =
      asa.channels[0] + e.channels[0].unaryExpr([&w](double x) { return apply_gate(x, w.gate); });
  FeatureMap gated = ca;
  for (auto& ch : gated.channels) ch *= gate;
  FeatureMap acc = gated;
  for (const auto& f : mfeb) acc = add(acc, f);
  acc = add(acc, s);
  return gaussian_conv(acc, w.sigma_mea);
}

FeatureMap saliency_conv(const FeatureMap& mea, const BranchWeights& w) {
  validate(mea, "saliency_conv");
  validate(w);
  return gaussian_conv(mix_channels(mea, w.psi_sal), w.sigma_sal);
}

FeatureMap upsample_nearest(const FeatureMap& f, int height, int width) {
  validate(f, "upsample_nearest");
  if (height < 1 || width < 1) {
    fail(errc::invalid_argument, "upsample_nearest: target dimensions must be >= 1");
  }
  FeatureMap out;
  out.channels.assign(f.channels.size(), RealGrid::Zero(height, width));
  for (size_t c = 0; c < f.channels.size(); ++c) {
    for (int r = 0; r < height; ++r) {
      const int sr = std::min(static_cast<int>(f.channels[c].rows()) - 1,
                              r * static_cast<int>(f.channels[c].rows()) / height);
      for (int cc = 0; cc < width; ++cc) {
        const int sc = std::min(static_cast<int>(f.channels[c].cols()) - 1,
                                cc * static_cast<int>(f.channels[c].cols()) / width);
        out.channels[c](r, cc) = f.channels[c](sr, sc);
      }
    }
  }
  return out;
}

FeatureMap cross_layer_attention(const FeatureMap& low, const FeatureMap& high,
                                 const AttentionConfig& cfg, FeatureMap* self_gate) {
  validate(low, "cross_layer_attention");
  validate(high, "cross_layer_attention");
  validate(cfg);
  if (low.channel_count() != cfg.wq.cols() || high.channel_count() != cfg.wk.cols()) {
    fail(errc::shape_mismatch, "cross_layer_attention: channels do not match projections");
  }

  const int h = low.height();
  const int w = low.width();
  const FeatureMap high_up = upsample_nearest(high, h, w);
  const FeatureMap q = mix_channels(low, cfg.wq);
  const FeatureMap k = mix_channels(high_up, cfg.wk);
  const FeatureMap v = mix_channels(high_up, cfg.wv);
  const int cq = q.channel_count();

  double knorm_sq = 0.0;
  for (const auto& ch : k.channels) knorm_sq += ch.square().sum();
  const double knorm = std::sqrt(knorm_sq);

  FeatureMap out;
  out.channels.assign(v.channels.size(), RealGrid::Zero(h, w));
  if (self_gate) {
    self_gate->channels.assign(1, RealGrid::Zero(h, w));
  }
  if (knorm == 0.0) return out;  // zero keys: gate defined as 0 everywhere

  const int radius = cfg.window_radius;
  const double two_sigma_sq = 2.0 * cfg.sigma_attn * cfg.sigma_attn;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int dr = -radius; dr <= radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (int dc = -radius; dc <= radius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= w) continue;
          double dot = 0.0;
          for (int ch = 0; ch < cq; ++ch) {
            dot += q.channels[static_cast<size_t>(ch)](r, c) *
                   k.channels[static_cast<size_t>(ch)](rr, cc);
          }
          const double alpha = apply_gate(dot / knorm, cfg.gate);
          if (self_gate && dr == 0 && dc == 0) self_gate->channels[0](r, c) = alpha;
          if (alpha == 0.0) continue;
          const double window =
              std::exp(-static_cast<double>(dr * dr + dc * dc) / two_sigma_sq);
          const double weight = alpha * window;
          for (size_t ch = 0; ch < v.channels.size(); ++ch) {
            out.channels[ch](r, c) += weight * v.channels[ch](rr, cc);
          }
        }
      }
    }
  }
  return out;
}

FeatureMap final_fuse(const FeatureMap& attn, const FeatureMap& out, const BranchWeights& w) {
  validate(attn, "final_fuse");
  validate(out, "final_fuse");
  validate(w);
  return gaussian_conv(add(attn, out), w.sigma_final);
}

FeatureMap run_pipeline(const FeatureMap& s_low, const FeatureMap& s_high,
                        const BranchWeights& w, const AttentionConfig& attn,
                        PipelineTrace* trace) {
  validate(s_low, "run_pipeline");
  validate(s_high, "run_pipeline");
  validate(w);
  validate(attn);
  if (s_low.channel_count() != w.channels || s_high.channel_count() != w.channels) {
    fail(errc::shape_mismatch, "run_pipeline: input channels do not match weights");
  }

  auto record = [trace](const char* name, const FeatureMap& f) {
    if (trace) trace->stages.emplace_back(name, f);
  };
  auto concat = [](std::initializer_list<const FeatureMap*> maps) {
    FeatureMap out;
    for (const FeatureMap* m : maps) {
      for (const auto& ch : m->channels) out.channels.push_back(ch);
    }
    return out;
  };

  record("stage10_smoothing", gaussian_conv(s_low, w.sigma_branch[0]));

  std::array<FeatureMap, 3> branches;
  for (int i = 0; i < 3; ++i) {
    branches[static_cast<size_t>(i)] =
        branch_filter(s_low, w.dilations[static_cast<size_t>(i)], w);
  }
  record("stage11_branch_filters", concat({&branches[0], &branches[1], &branches[2]}));

  const FeatureMap fused = fuse_branches(branches[0], branches[1], branches[2], w);
  record("stage12_fused", fused);

  std::array<FeatureMap, 3> mfeb;
  for (int k = 1; k <= 3; ++k) {
    mfeb[static_cast<size_t>(k - 1)] = mfeb_output(k, branches, aux_conv(s_low, k, w), s_low, w);
  }
  record("stage13_mfeb", concat({&mfeb[0], &mfeb[1], &mfeb[2]}));

  const FeatureMap ca = channel_attention(mfeb[2], w);
  record("stage14_channel_attention", ca);

  const FeatureMap e = edge_filter(fused, ca, w);
  record("stage15_edge", e);

  const FeatureMap asa = spatial_attention(ca, w);
  record("stage16_spatial_attention", asa);

  const FeatureMap mea = mea_fusion(asa, e, ca, mfeb, s_low, w);
  record("stage17_mea", mea);

  const FeatureMap sal = saliency_conv(mea, w);
  record("stage18_saliency", sal);

  FeatureMap self_gate;
  const FeatureMap cross = cross_layer_attention(s_low, s_high, attn, &self_gate);
  record("stage19_attention_gate", self_gate);
  record("stage20_cross_layer", cross);

  const FeatureMap result = final_fuse(cross, sal, w);
  record("stage21_final", result);
  return result;
}

}  // namespace wpc::comp
