#pragma once

#include <cstdint>
#include <limits>
#include <variant>

#include "wpc/fresnel.hpp"

namespace wpc::speckle {

// Additive Gaussian intensity noise with standard deviation sigma (same
// units as the intensity); sigma == 0 means noiseless.
struct GaussianNoise {
  double sigma = 0.0;
};

// Shot noise: counts drawn from Poisson(scale * intensity) and divided by
// scale. Larger scale = cleaner measurement.
struct PoissonNoise {
  double scale = 1.0;
};

struct NoNoise {};

using NoiseModel = std::variant<NoNoise, GaussianNoise, PoissonNoise>;

struct SceneConfig {
  int width = 64;
  int height = 64;
  double pitch = 1e-5;       // meters
  double wavelength = 633e-9;  // meters
  double z1 = 0.0;           // object -> screen distance, meters
  double z2 = 0.0;           // screen -> sensor distance, meters
  RealGrid object_mask;      // values in [0, 1], height x width
  double screen_phase_std = 0.0;        // radians
  double screen_correlation_length = 1e-4;  // meters; 1/e autocorrelation radius
  NoiseModel noise;
  uint64_t seed = 0;
};

void validate(const SceneConfig& cfg);

// Unit-modulus random phase screen exp(i*phi): phi is a Gaussian random
// field with pointwise std phase_std and Gaussian autocorrelation
// C(r) = phase_std^2 * exp(-r^2 / correlation_length^2), synthesized
// spectrally (white noise shaped by a Gaussian transfer function with the
// analytic, data-independent variance normalization). phase_std == 0 gives
// the all-ones screen.
ComplexField make_phase_screen(int width, int height, double pitch, double phase_std,
                               double correlation_length, uint64_t seed);

struct SimInstance {
  ComplexField ground_truth_field;  // the object-plane field U0
  ComplexField sensor_field;        // E = T_z2[screen . T_z1[U0]], noiseless
  ComplexField screen;
  RealGrid intensity;               // measured: |E|^2 + noise, clamped >= 0
  RealGrid noiseless_intensity;     // |E|^2
  // 10*log10(mean(I_clean^2) / noise variance); +inf when noiseless.
  double snr_db = std::numeric_limits<double>::infinity();
};

// Adds noise to a noiseless intensity per the model; negative results are
// clamped to zero. Deterministic given the seed.
RealGrid add_noise(const RealGrid& intensity, const NoiseModel& model, uint64_t seed);

// Noise variance used by the SNR definition (gaussian: sigma^2; poisson:
// mean(intensity)/scale; none: 0).
double noise_variance(const RealGrid& noiseless_intensity, const NoiseModel& model);

// Full forward model: propagate the object z1, multiply by the screen,
// propagate z2, detect intensity, add noise.
SimInstance simulate(const SceneConfig& cfg);

// Deterministic seeded binary object mask (a few random rectangles and
// discs, roughly the requested coverage fraction). Plumbing for the CLI and
// the end-to-end tests.
RealGrid make_object_mask(int width, int height, double coverage, uint64_t seed);

}  // namespace wpc::speckle
