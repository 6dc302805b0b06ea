#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wpc/errors.hpp"
#include "wpc/rng.hpp"
#include "wpc/speckle.hpp"

using namespace wpc;
using namespace wpc::speckle;

namespace {

SceneConfig base_scene(int n = 64) {
  SceneConfig cfg;
  cfg.width = n;
  cfg.height = n;
  cfg.pitch = 1e-5;
  cfg.wavelength = 633e-9;
  cfg.z1 = 0.002;
  cfg.z2 = 0.002;
  cfg.object_mask = make_object_mask(n, n, 0.2, 1);
  cfg.screen_phase_std = 0.3;
  cfg.screen_correlation_length = 1e-4;
  cfg.noise = NoNoise{};
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("seed mixing produces decorrelated stream seeds") {
  CHECK(hash_seed(1, 0) != hash_seed(1, 1));
  CHECK(hash_seed(1, 0) != hash_seed(2, 0));
  CHECK(hash_seed(1, 0) == hash_seed(1, 0));
}

TEST_CASE("zero phase std gives the all-ones screen") {
  const ComplexField screen = make_phase_screen(16, 16, 1e-5, 0.0, 1e-4, 3);
  CHECK((screen.data == Complex(1.0, 0.0)).all());
}

TEST_CASE("phase screen is unit modulus") {
  const ComplexField screen = make_phase_screen(32, 32, 1e-5, 0.5, 1e-4, 4);
  CHECK(((screen.data.abs() - 1.0).abs() <= 1e-12).all());
}

TEST_CASE("phase screen std matches the configured value") {
  // 256x256 gives enough samples for a 10% empirical check; std = 0.3 keeps
  // phases well inside (-pi, pi] so arg() recovers them unwrapped.
  const double want = 0.3;
  const ComplexField screen = make_phase_screen(256, 256, 1e-5, want, 1e-4, 5);
  double sum = 0.0, ss = 0.0;
  const double n = 256.0 * 256.0;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) {
      const double ph = std::arg(screen.data(r, c));
      sum += ph;
      ss += ph * ph;
    }
  const double mean = sum / n;
  const double std = std::sqrt(ss / n - mean * mean);
  CHECK(std::abs(std - want) <= 0.1 * want);
}

TEST_CASE("phase screen correlation length shows in the autocorrelation") {
  // With l = 10 px the phase field must correlate strongly at 2 px and
  // weakly at 20 px.
  const ComplexField screen = make_phase_screen(256, 256, 1e-5, 0.3, 1e-4, 6);
  RealGrid phase(256, 256);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) phase(r, c) = std::arg(screen.data(r, c));
  auto corr = [&](int lag) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < 256; ++r)
      for (int c = 0; c + lag < 256; ++c) {
        num += phase(r, c) * phase(r, c + lag);
        den += phase(r, c) * phase(r, c);
      }
    return num / den;
  };
  CHECK(corr(2) > 0.8);          // exp(-(2/10)^2) = 0.96
  CHECK(std::abs(corr(30)) < 0.2);  // exp(-9) ~ 0
}

TEST_CASE("trivial geometry reproduces the mask intensity exactly") {
  SceneConfig cfg = base_scene(32);
  cfg.z1 = 0.0;
  cfg.z2 = 0.0;
  cfg.screen_phase_std = 0.0;
  const SimInstance sim = simulate(cfg);
  // z = 0 propagation is the exact identity and the screen is exactly 1.
  CHECK((sim.intensity == cfg.object_mask.square()).all());
  CHECK(std::isinf(sim.snr_db));
  CHECK(sim.snr_db > 0.0);
}

TEST_CASE("simulation is deterministic in the seed") {
  SceneConfig cfg = base_scene();
  cfg.noise = GaussianNoise{0.01};
  const SimInstance a = simulate(cfg);
  const SimInstance b = simulate(cfg);
  CHECK((a.intensity == b.intensity).all());
  CHECK((a.screen.data == b.screen.data).all());
  cfg.seed = 8;
  const SimInstance c = simulate(cfg);
  CHECK((a.intensity != c.intensity).any());
}

TEST_CASE("gaussian noise statistics") {
  SceneConfig cfg = base_scene(256);
  cfg.object_mask = make_object_mask(256, 256, 0.2, 2);
  const double sigma = 0.05;
  cfg.noise = GaussianNoise{sigma};
  const SimInstance sim = simulate(cfg);
  // Estimate the added-noise std where clamping cannot bite (bright pixels).
  double ss = 0.0;
  int count = 0;
  const double floor = 10.0 * sigma;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c)
      if (sim.noiseless_intensity(r, c) > floor) {
        const double d = sim.intensity(r, c) - sim.noiseless_intensity(r, c);
        ss += d * d;
        ++count;
      }
  REQUIRE(count > 2000);
  const double got = std::sqrt(ss / count);
  CHECK(std::abs(got - sigma) <= 0.05 * sigma);
  CHECK((sim.intensity >= 0.0).all());
  CHECK(noise_variance(sim.noiseless_intensity, cfg.noise) == doctest::Approx(sigma * sigma));
}

TEST_CASE("poisson noise preserves the mean intensity") {
  SceneConfig cfg = base_scene(256);
  cfg.object_mask = make_object_mask(256, 256, 0.25, 3);
  cfg.noise = PoissonNoise{1000.0};
  const SimInstance sim = simulate(cfg);
  const double clean = sim.noiseless_intensity.mean();
  const double noisy = sim.intensity.mean();
  CHECK(std::abs(noisy - clean) <= 0.02 * clean);
  CHECK(noise_variance(sim.noiseless_intensity, cfg.noise) ==
        doctest::Approx(clean / 1000.0).epsilon(1e-12));
}

TEST_CASE("snr matches its definition for gaussian noise") {
  SceneConfig cfg = base_scene();
  cfg.noise = GaussianNoise{0.02};
  const SimInstance sim = simulate(cfg);
  const double power = sim.noiseless_intensity.square().mean();
  const double want = 10.0 * std::log10(power / (0.02 * 0.02));
  CHECK(sim.snr_db == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("band-limited propagation cannot create energy") {
  SceneConfig cfg = base_scene();
  cfg.screen_phase_std = 0.8;
  const SimInstance sim = simulate(cfg);
  const double in = std::sqrt(cfg.object_mask.square().sum());
  const double out = l2_norm(sim.sensor_field);
  CHECK(out <= in * (1.0 + 1e-12));
}

TEST_CASE("object masks are binary, seeded, and roughly sized") {
  const RealGrid m = make_object_mask(64, 64, 0.2, 11);
  CHECK(((m == 0.0) || (m == 1.0)).all());
  const double coverage = m.mean();
  CHECK(coverage > 0.05);
  CHECK(coverage < 0.5);
  const RealGrid m2 = make_object_mask(64, 64, 0.2, 11);
  CHECK((m == m2).all());
  const RealGrid m3 = make_object_mask(64, 64, 0.2, 12);
  CHECK((m != m3).any());
}

TEST_CASE("add_noise clamps negatives to zero") {
  RealGrid dark = RealGrid::Zero(64, 64);
  const RealGrid noisy = add_noise(dark, GaussianNoise{1.0}, 13);
  CHECK((noisy >= 0.0).all());
  CHECK((noisy > 0.0).any());  // half the draws would have been negative
  const RealGrid silent = add_noise(dark, NoNoise{}, 13);
  CHECK((silent == 0.0).all());
}

TEST_CASE("scene validation rejects bad configs") {
  SceneConfig cfg = base_scene();
  cfg.width = 1;
  CHECK_THROWS_AS(validate(cfg), Error);

  cfg = base_scene();
  cfg.pitch = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);

  cfg = base_scene();
  cfg.z1 = -1.0;
  CHECK_THROWS_AS(validate(cfg), Error);

  cfg = base_scene();
  cfg.object_mask = RealGrid::Zero(8, 8);  // wrong shape
  bool caught = false;
  try {
    validate(cfg);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == errc::shape_mismatch);
  }
  CHECK(caught);

  cfg = base_scene();
  cfg.object_mask.setConstant(1.5);  // out of range
  CHECK_THROWS_AS(validate(cfg), Error);

  cfg = base_scene();
  cfg.noise = PoissonNoise{0.0};
  CHECK_THROWS_AS(validate(cfg), Error);
}
