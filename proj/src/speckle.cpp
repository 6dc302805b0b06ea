#include "wpc/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "wpc/errors.hpp"
#include "wpc/rng.hpp"

namespace wpc::speckle {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace

void validate(const SceneConfig& cfg) {
  if (cfg.width < 2 || cfg.height < 2) fail(errc::invalid_argument, "scene dimensions must be at least 2x2");
  if (!(cfg.pitch > 0.0)) fail(errc::invalid_argument, "pitch must be positive");
  if (!(cfg.wavelength > 0.0)) fail(errc::invalid_argument, "wavelength must be positive");
  if (cfg.z1 < 0.0 || cfg.z2 < 0.0) fail(errc::invalid_argument, "propagation distances must be non-negative");
  if (cfg.object_mask.rows() != cfg.height || cfg.object_mask.cols() != cfg.width)
    fail(errc::shape_mismatch, "object mask does not match the scene dimensions");
  if ((cfg.object_mask < 0.0).any() || (cfg.object_mask > 1.0).any())
    fail(errc::invalid_argument, "object mask values must lie in [0, 1]");
  if (cfg.screen_phase_std < 0.0) fail(errc::invalid_argument, "screen phase std must be non-negative");
  if (!(cfg.screen_correlation_length > 0.0))
    fail(errc::invalid_argument, "screen correlation length must be positive");
  if (const auto* g = std::get_if<GaussianNoise>(&cfg.noise)) {
    if (g->sigma < 0.0) fail(errc::invalid_argument, "gaussian noise sigma must be non-negative");
  } else if (const auto* p = std::get_if<PoissonNoise>(&cfg.noise)) {
    if (!(p->scale > 0.0)) fail(errc::invalid_argument, "poisson noise scale must be positive");
  }
}

ComplexField make_phase_screen(int width, int height, double pitch, double phase_std,
                               double correlation_length, uint64_t seed) {
  if (width < 2 || height < 2) fail(errc::invalid_argument, "phase screen dimensions must be at least 2x2");
  if (!(pitch > 0.0)) fail(errc::invalid_argument, "pitch must be positive");
  if (phase_std < 0.0) fail(errc::invalid_argument, "phase std must be non-negative");
  if (!(correlation_length > 0.0)) fail(errc::invalid_argument, "correlation length must be positive");

  ComplexField screen = make_field(width, height, pitch);
  if (phase_std == 0.0) {
    screen.data.setConstant(Complex(1.0, 0.0));
    return screen;
  }

  // White Gaussian noise shaped in the frequency domain by a Gaussian
  // transfer G(f) = exp(-(pi * l * |f|)^2 / 2), which realizes the target
  // autocorrelation C(r) = s^2 exp(-r^2 / l^2). The realized variance of
  // the shaped field is data independent -- mean over bins of G^2 -- so the
  // scale factor below is analytic rather than sample based.
  Rng rng(seed);
  ComplexField noise = make_field(width, height, pitch);
  for (Eigen::Index r = 0; r < noise.data.rows(); ++r)
    for (Eigen::Index c = 0; c < noise.data.cols(); ++c)
      noise.data(r, c) = Complex(rng.normal(), rng.normal());

  const FrequencyGrid freq = frequency_grid(width, height, pitch);
  const RealGrid f2 = freq.norm_squared();
  const double l = correlation_length;
  const RealGrid transfer = (-0.5 * kPi * kPi * l * l * f2).exp();

  ComplexField spec = forward_spectrum(noise);
  spec.data *= transfer.cast<Complex>();
  ComplexField shaped = inverse_spectrum(spec);

  // Per-component variance of Re/Im of the shaped field: mean_f G(f)^2.
  const double var_component = transfer.square().mean();
  if (!(var_component > 0.0)) fail(errc::invalid_argument, "correlation length too large for this grid");
  const double scale = phase_std / std::sqrt(var_component);

  for (Eigen::Index r = 0; r < screen.data.rows(); ++r)
    for (Eigen::Index c = 0; c < screen.data.cols(); ++c) {
      const double phi = scale * shaped.data(r, c).real();
      screen.data(r, c) = Complex(std::cos(phi), std::sin(phi));
    }
  return screen;
}

RealGrid add_noise(const RealGrid& intensity, const NoiseModel& model, uint64_t seed) {
  RealGrid out = intensity;
  if (std::holds_alternative<NoNoise>(model)) return out;
  Rng rng(seed);
  if (const auto* g = std::get_if<GaussianNoise>(&model)) {
    if (g->sigma == 0.0) return out;
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        out(r, c) = std::max(0.0, out(r, c) + g->sigma * rng.normal());
    return out;
  }
  const auto& p = std::get<PoissonNoise>(model);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double lambda = std::max(0.0, out(r, c)) * p.scale;
      out(r, c) = static_cast<double>(rng.poisson(lambda)) / p.scale;
    }
  return out;
}

double noise_variance(const RealGrid& noiseless_intensity, const NoiseModel& model) {
  if (std::holds_alternative<NoNoise>(model)) return 0.0;
  if (const auto* g = std::get_if<GaussianNoise>(&model)) return g->sigma * g->sigma;
  const auto& p = std::get<PoissonNoise>(model);
  // Var(N/scale) with N ~ Poisson(scale * I) is I / scale; average over pixels.
  return noiseless_intensity.mean() / p.scale;
}

SimInstance simulate(const SceneConfig& cfg) {
  validate(cfg);
  SimInstance out;

  out.ground_truth_field = make_field(cfg.width, cfg.height, cfg.pitch, cfg.wavelength);
  out.ground_truth_field.data = cfg.object_mask.cast<Complex>();

  out.screen = make_phase_screen(cfg.width, cfg.height, cfg.pitch, cfg.screen_phase_std,
                                 cfg.screen_correlation_length, hash_seed(cfg.seed, 0x5c7ee9));
  out.screen.wavelength = cfg.wavelength;

  const PropagationSpec hop1 = make_spec(cfg.wavelength, cfg.z1);
  const PropagationSpec hop2 = make_spec(cfg.wavelength, cfg.z2);
  ComplexField mid = propagate(out.ground_truth_field, hop1);
  mid = pointwise_multiply(mid, out.screen);
  out.sensor_field = propagate(mid, hop2);

  out.noiseless_intensity = magnitude_squared(out.sensor_field);
  out.intensity = add_noise(out.noiseless_intensity, cfg.noise, hash_seed(cfg.seed, 0x201e5e));

  const double var = noise_variance(out.noiseless_intensity, cfg.noise);
  if (var > 0.0) {
    const double signal = out.noiseless_intensity.square().mean();
    out.snr_db = 10.0 * std::log10(signal / var);
  }
  return out;
}

RealGrid make_object_mask(int width, int height, double coverage, uint64_t seed) {
  if (width < 2 || height < 2) fail(errc::invalid_argument, "mask dimensions must be at least 2x2");
  if (!(coverage > 0.0) || coverage >= 1.0) fail(errc::invalid_argument, "coverage must lie in (0, 1)");
  Rng rng(seed);
  RealGrid mask = RealGrid::Zero(height, width);
  const double target = coverage * width * height;
  int guard = 0;
  while (mask.sum() < target && guard++ < 64) {
    const bool disc = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.15, 0.85) * width;
    const double cy = rng.uniform(0.15, 0.85) * height;
    if (disc) {
      const double radius = rng.uniform(0.08, 0.22) * std::min(width, height);
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
          const double dr = r - cy, dc = c - cx;
          if (dr * dr + dc * dc <= radius * radius) mask(r, c) = 1.0;
        }
    } else {
      const double hw = rng.uniform(0.06, 0.18) * width;
      const double hh = rng.uniform(0.06, 0.18) * height;
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
          if (std::abs(r - cy) <= hh && std::abs(c - cx) <= hw) mask(r, c) = 1.0;
    }
  }
  return mask;
}

}  // namespace wpc::speckle
