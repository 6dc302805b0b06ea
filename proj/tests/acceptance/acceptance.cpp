// Acceptance gate: one binary, one [PASS]/[FAIL] line per shipped guarantee.
// Each criterion is checked at its pinned tolerance against independent
// oracles (closed forms, brute-force references, or the real CLI binary).
// The CLI path comes in through the WPC_CLI environment variable.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "../metrics_reference.hpp"
#include "wpc/compensation.hpp"
#include "wpc/field.hpp"
#include "wpc/fresnel.hpp"
#include "wpc/io.hpp"
#include "wpc/metrics.hpp"
#include "wpc/rng.hpp"
#include "wpc/speckle.hpp"
#include "wpc/triwcp.hpp"

using namespace wpc;
using json = nlohmann::json;
namespace fs = std::filesystem;

#define REQUIRE(cond)                                                      \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::printf("[FAIL] %s:%d %s\n", __FILE__, __LINE__, #cond);         \
      std::exit(1);                                                        \
    }                                                                      \
  } while (0)

#define REQUIRE_MSG(cond, ...)                                             \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::printf("[FAIL] %s:%d ", __FILE__, __LINE__);                    \
      std::printf(__VA_ARGS__);                                            \
      std::printf("\n");                                                   \
      std::exit(1);                                                        \
    }                                                                      \
  } while (0)

namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

ComplexField random_field(int w, int h, uint64_t seed, double pitch, double amp = 1.0) {
  Rng rng(seed);
  ComplexField f = make_field(w, h, pitch);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) f.data(r, c) = amp * Complex(rng.normal(), rng.normal());
  return f;
}

ComplexField unit_norm(const ComplexField& f) {
  return scale(f, Complex(1.0 / l2_norm(f), 0.0));
}

ComplexField gaussian_field(int n, double pitch, double waist, double wavelength) {
  ComplexField f = make_field(n, n, pitch, wavelength);
  const double cx = (n - 1) / 2.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double x = (c - cx) * pitch;
      const double y = (r - cx) * pitch;
      f.data(r, c) = Complex(std::exp(-(x * x + y * y) / (waist * waist)), 0.0);
    }
  return f;
}

double rel_err(const ComplexField& got, const ComplexField& want) {
  return l2_norm(subtract(got, want)) / l2_norm(want);
}

// --- criterion 1: operator algebra ----------------------------------------

void criterion1() {
  Timer timer;
  const double pitch = 1e-5, lambda = 633e-9;
  Rng zrng(0xa1);
  for (int i = 0; i < 100; ++i) {
    const uint64_t s = 10'000 + static_cast<uint64_t>(i);
    const double z = zrng.uniform(0.001, 0.005);
    const PropagationSpec spec = make_spec(lambda, z);
    const ComplexField u = unit_norm(random_field(64, 64, s, pitch));
    const ComplexField v = unit_norm(random_field(64, 64, s + 500, pitch));

    // Parseval on the admissible subspace: propagation preserves the norm.
    const ComplexField pu = project_subspace(u, spec);
    const double n0 = l2_norm(pu);
    REQUIRE(std::abs(l2_norm(propagate(pu, spec)) - n0) <= 1e-12 * n0);

    // Adjoint identity <Tu, v> = <u, T'v>.
    const Complex lhs = inner_product(propagate(u, spec), v);
    const Complex rhs = inner_product(u, adjoint_propagate(v, spec));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10);

    // Projector: idempotent and self-adjoint.
    REQUIRE(l2_norm(subtract(project_subspace(pu, spec), pu)) <= 1e-10);
    REQUIRE(std::abs(inner_product(pu, v) - inner_product(u, project_subspace(v, spec))) <=
            1e-10);

    // The out-of-band component is annihilated (energy fraction).
    const ComplexField oob = subtract(u, pu);
    const double t = l2_norm(propagate(oob, spec));
    REQUIRE(t * t <= 1e-12);

    // Semigroup composition on inputs band-limited to the total distance.
    const double z1 = zrng.uniform(0.001, 0.004);
    const double z2 = zrng.uniform(0.001, 0.004);
    const ComplexField w = project_subspace(u, make_spec(lambda, z1 + z2));
    const ComplexField two_hop =
        propagate(propagate(w, make_spec(lambda, z1)), make_spec(lambda, z2));
    const ComplexField one_hop = propagate(w, make_spec(lambda, z1 + z2));
    REQUIRE(rel_err(two_hop, one_hop) <= 1e-10);
  }
  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 10.0, "criterion 1 exceeded its 10s budget: %.2fs", dt);
  std::printf("[PASS] criterion 1: operator algebra on 100 random 64x64 fields (%.2fs)\n", dt);
}

// --- criterion 2: physics oracles ------------------------------------------

double beam_width(const ComplexField& out, double pitch) {
  const RealGrid inten = magnitude_squared(out);
  const int n = static_cast<int>(inten.rows());
  const double cx = (n - 1) / 2.0;
  double s = 0.0, srr = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double x = (c - cx) * pitch;
      const double y = (r - cx) * pitch;
      s += inten(r, c);
      srr += inten(r, c) * (x * x + y * y);
    }
  return std::sqrt(2.0 * srr / s);
}

void criterion2() {
  Timer timer;
  const double lambda = 633e-9;

  // Dense operator oracle vs the FFT fast path on 16x16 fields.
  {
    const PropagationSpec spec = make_spec(lambda, 0.002);
    for (uint64_t s : {1u, 2u, 3u, 4u, 5u}) {
      const ComplexField u = random_field(16, 16, 20'000 + s, 1e-5);
      REQUIRE(rel_err(dense_operator_oracle(u, spec), propagate(u, spec)) <= 1e-10);
    }
  }

  // Direct quadrature vs transfer-function propagation, up to one global
  // complex scalar, on sampling-compliant Gaussians. Both discretizations
  // are valid together just below the critical distance lambda*z = N*pitch^2.
  {
    const struct {
      double z, waist;
    } cases[] = {{0.0045, 4e-5}, {0.005, 5e-5}};
    for (const auto& cs : cases) {
      const PropagationSpec spec = make_spec(lambda, cs.z);
      const ComplexField u = gaussian_field(32, 1e-5, cs.waist, lambda);
      REQUIRE(fresnel_sampling_satisfied(u, spec));
      const ComplexField fast = propagate(u, spec);
      const ComplexField direct = direct_fresnel_oracle(u, spec);
      const Complex alpha = inner_product(fast, direct) / inner_product(fast, fast).real();
      REQUIRE(rel_err(scale(fast, alpha), direct) <= 5e-2);
    }
  }

  // Gaussian beam width law w(z) = w0 sqrt(1 + (z/zR)^2) at five distances.
  {
    const int n = 256;
    const double pitch = 1e-5, w0 = 2e-4;
    const double zr = M_PI * w0 * w0 / lambda;
    const ComplexField u = gaussian_field(n, pitch, w0, lambda);
    for (double z : {0.01, 0.02, 0.03, 0.04, 0.05}) {
      const double w_measured = beam_width(propagate(u, make_spec(lambda, z)), pitch);
      const double w_expected = w0 * std::sqrt(1.0 + (z / zr) * (z / zr));
      REQUIRE_MSG(std::abs(w_measured - w_expected) <= 0.02 * w_expected,
                  "beam width at z=%.3f: measured %.6e expected %.6e", z, w_measured,
                  w_expected);
    }
  }

  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 60.0, "criterion 2 exceeded its 60s budget: %.2fs", dt);
  std::printf(
      "[PASS] criterion 2: dense/quadrature/beam-width oracles at pinned tolerances (%.2fs)\n",
      dt);
}

// --- criterion 3: solver recurrences and descent ---------------------------

void criterion3() {
  Timer timer;
  const double pitch = 1e-5, lambda = 633e-9;

  // Recursive m/v accumulators equal the explicit exponential sums over
  // random 3-step gradient histories (z = 0: the step signal is the raw
  // gradient).
  {
    const PropagationSpec spec = make_spec(lambda, 0.0);
    const SolverConfig cfg;
    for (int h = 0; h < 10; ++h) {
      const uint64_t base = 30'000 + 10 * static_cast<uint64_t>(h);
      SolverState st = make_state(random_field(8, 8, base, pitch));
      std::array<ComplexField, 3> g = {random_field(8, 8, base + 1, pitch),
                                       random_field(8, 8, base + 2, pitch),
                                       random_field(8, 8, base + 3, pitch)};
      for (int t = 0; t < 3; ++t) {
        const ComplexField m_next = momentum_step(st, g[static_cast<size_t>(t)], cfg, spec);
        const RealGrid v_next = energy_step(st, g[static_cast<size_t>(t)], cfg, spec);
        st.m = m_next;
        st.v = v_next;
        st.t = t + 1;
      }
      ComplexGrid m_exp = ComplexGrid::Zero(8, 8);
      RealGrid v_exp = RealGrid::Zero(8, 8);
      for (int t = 0; t < 3; ++t) {
        m_exp += std::pow(cfg.beta1, 2 - t) * g[static_cast<size_t>(t)].data;
        v_exp += std::pow(cfg.beta2, 2 - t) * g[static_cast<size_t>(t)].data.abs2();
      }
      REQUIRE((st.m.data - m_exp).abs().maxCoeff() <= 1e-12);
      REQUIRE((st.v - v_exp).abs().maxCoeff() <= 1e-12);
    }
  }

  // Conjugate-Wirtinger gradient vs central finite differences on 8x8.
  {
    const PropagationSpec spec = make_spec(lambda, 0.002);
    IntensityObjective obj;
    obj.spec = spec;
    obj.pitch = pitch;
    obj.measured = magnitude_squared(propagate(random_field(8, 8, 31'000, pitch), spec));
    const ComplexField psi = random_field(8, 8, 31'001, pitch);
    const ComplexField g = gradient(obj, psi);
    const double step = 1e-5;
    for (uint64_t hs : {31'002u, 31'003u, 31'004u}) {
      const ComplexField h = random_field(8, 8, hs, pitch);
      const double lp = objective_value(obj, add(psi, scale(h, Complex(step, 0.0))));
      const double lm = objective_value(obj, add(psi, scale(h, Complex(-step, 0.0))));
      const double fd = (lp - lm) / (2.0 * step);
      const double analytic = 2.0 * inner_product(g, h).real();
      REQUIRE(std::abs(fd - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
    }
  }

  // A zero-gradient start returns the projected initializer bitwise.
  {
    const PropagationSpec spec = make_spec(lambda, 0.002);
    IntensityObjective obj;
    obj.spec = spec;
    obj.pitch = pitch;
    const ComplexField psi0 = project_subspace(random_field(16, 16, 32'000, pitch), spec);
    obj.measured = magnitude_squared(propagate(psi0, spec));
    const SolveResult res = run_triwcp(psi0, obj, SolverConfig{});
    REQUIRE(res.initial_objective == 0.0);
    for (double lt : res.phase_objectives) REQUIRE(lt == 0.0);
    REQUIRE((res.psi_final.data == project_subspace(psi0, spec).data).all());
  }

  // 100 seeded phase-retrieval instances, default config: the objective must
  // not increase on at least 90, and every output must be band-limited.
  {
    const PropagationSpec spec = make_spec(lambda, 0.002);
    int descended = 0;
    for (int i = 0; i < 100; ++i) {
      const uint64_t seed = 33'000 + static_cast<uint64_t>(i);
      const ComplexField truth =
          project_subspace(random_field(32, 32, seed, pitch, 12.0), spec);
      IntensityObjective obj;
      obj.spec = spec;
      obj.pitch = pitch;
      obj.measured = magnitude_squared(propagate(truth, spec));

      ComplexField pert = project_subspace(random_field(32, 32, seed + 5'000, pitch), spec);
      const double to = 0.1 * l2_norm(truth) / l2_norm(pert);
      const ComplexField psi0 = add(truth, scale(pert, Complex(to, 0.0)));

      const SolveResult res = run_triwcp(psi0, obj, SolverConfig{});
      if (res.final_objective <= res.initial_objective) ++descended;
      REQUIRE(out_of_band_fraction(res.psi_final, spec) <= 1e-12);
    }
    REQUIRE_MSG(descended >= 90, "only %d/100 instances descended", descended);
  }

  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 120.0, "criterion 3 exceeded its 120s budget: %.2fs", dt);
  std::printf(
      "[PASS] criterion 3: solver recurrences, gradient, fixed point, 100-seed descent "
      "(%.2fs)\n",
      dt);
}

// --- criterion 4: compensation pipeline ------------------------------------

comp::FeatureMap random_map(int channels, int h, int w, uint64_t seed) {
  Rng rng(seed);
  comp::FeatureMap f = comp::make_feature_map(channels, h, w);
  for (auto& ch : f.channels)
    for (Eigen::Index r = 0; r < ch.rows(); ++r)
      for (Eigen::Index c = 0; c < ch.cols(); ++c) ch(r, c) = rng.normal();
  return f;
}

bool map_all_zero(const comp::FeatureMap& f) {
  for (const auto& ch : f.channels)
    if ((ch != 0.0).any()) return false;
  return true;
}

bool map_identical(const comp::FeatureMap& a, const comp::FeatureMap& b) {
  if (a.channel_count() != b.channel_count()) return false;
  for (size_t c = 0; c < a.channels.size(); ++c)
    if (!(a.channels[c] == b.channels[c]).all()) return false;
  return true;
}

double map_max_diff(const comp::FeatureMap& a, const comp::FeatureMap& b) {
  double m = 0.0;
  for (size_t c = 0; c < a.channels.size(); ++c)
    m = std::max(m, (a.channels[c] - b.channels[c]).abs().maxCoeff());
  return m;
}

void criterion4() {
  using namespace wpc::comp;
  Timer timer;
  const int C = 4;
  const BranchWeights w = seeded_weights(C, 14);
  const AttentionConfig attn = seeded_attention(C, 15);

  // Zero inputs stay exactly zero through all 12 traced stages.
  {
    PipelineTrace trace;
    const FeatureMap out =
        run_pipeline(make_feature_map(C, 16, 16), make_feature_map(C, 8, 8), w, attn, &trace);
    REQUIRE(trace.stages.size() == 12);
    for (const auto& [name, stage] : trace.stages) REQUIRE(map_all_zero(stage));
    REQUIRE(map_all_zero(out));
  }

  // ReLU-gated stage records are non-negative.
  {
    PipelineTrace trace;
    (void)run_pipeline(random_map(C, 16, 16, 18), random_map(C, 8, 8, 19), w, attn, &trace);
    int checked = 0;
    for (const auto& [name, stage] : trace.stages) {
      if (name == "stage12_fused" || name == "stage16_spatial_attention" ||
          name == "stage19_attention_gate") {
        for (const auto& ch : stage.channels) REQUIRE((ch >= 0.0).all());
        ++checked;
      }
    }
    REQUIRE(checked == 3);
  }

  // Linear stages are additive.
  {
    const FeatureMap a = random_map(C, 12, 10, 2);
    const FeatureMap b = random_map(C, 12, 10, 3);
    const FeatureMap ab = add(a, b);
    REQUIRE(map_max_diff(gaussian_conv(ab, 1.5),
                         add(gaussian_conv(a, 1.5), gaussian_conv(b, 1.5))) <= 1e-10);
    for (int k = 1; k <= 3; ++k)
      REQUIRE(map_max_diff(aux_conv(ab, k, w), add(aux_conv(a, k, w), aux_conv(b, k, w))) <=
              1e-10);
    std::array<FeatureMap, 3> br_a, br_b, br_ab;
    for (int i = 0; i < 3; ++i) {
      br_a[static_cast<size_t>(i)] = random_map(C, 12, 10, 10 + static_cast<uint64_t>(i));
      br_b[static_cast<size_t>(i)] = random_map(C, 12, 10, 20 + static_cast<uint64_t>(i));
      br_ab[static_cast<size_t>(i)] =
          add(br_a[static_cast<size_t>(i)], br_b[static_cast<size_t>(i)]);
    }
    const FeatureMap aux_a = random_map(C, 12, 10, 30);
    const FeatureMap aux_b = random_map(C, 12, 10, 31);
    for (int k = 1; k <= 3; ++k)
      REQUIRE(map_max_diff(mfeb_output(k, br_ab, add(aux_a, aux_b), ab, w),
                           add(mfeb_output(k, br_a, aux_a, a, w),
                               mfeb_output(k, br_b, aux_b, b, w))) <= 1e-10);
    const FeatureMap ca_a = random_map(C, 12, 10, 40);
    const FeatureMap ca_b = random_map(C, 12, 10, 41);
    REQUIRE(map_max_diff(edge_filter(ab, add(ca_a, ca_b), w),
                         add(edge_filter(a, ca_a, w), edge_filter(b, ca_b, w))) <= 1e-10);
    REQUIRE(map_max_diff(saliency_conv(ab, w),
                         add(saliency_conv(a, w), saliency_conv(b, w))) <= 1e-10);
    const FeatureMap o1 = random_map(C, 12, 10, 50);
    const FeatureMap o2 = random_map(C, 12, 10, 51);
    REQUIRE(map_max_diff(final_fuse(ab, add(o1, o2), w),
                         add(final_fuse(a, o1, w), final_fuse(b, o2, w))) <= 1e-10);
  }

  // Smoothing kernels carry exactly unit mass (impulse response sums to 1).
  {
    const int n = 25;
    for (double sigma : {0.5, 1.0, 1.5, 3.0}) {
      FeatureMap impulse = make_feature_map(1, n, n);
      impulse.channels[0](n / 2, n / 2) = 1.0;
      REQUIRE(std::abs(gaussian_conv(impulse, sigma).channels[0].sum() - 1.0) <= 1e-12);
    }
  }

  // Each branch responds more to its own band than to a foreign one.
  {
    BranchWeights wid = seeded_weights(1, 7);
    for (auto& th : wid.theta) th = Eigen::MatrixXd::Identity(1, 1);
    const int n = 64;
    auto grating = [&](int cycles) {
      FeatureMap f = make_feature_map(1, n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          f.channels[0](r, c) = std::cos(2.0 * M_PI * cycles * static_cast<double>(c) / n);
      return f;
    };
    const struct {
      int dilation, in_cycles, out_cycles;
    } probes[3] = {{1, 26, 4}, {3, 12, 26}, {5, 4, 26}};
    for (const auto& p : probes) {
      const double e_in = total_energy(branch_filter(grating(p.in_cycles), p.dilation, wid));
      const double e_out = total_energy(branch_filter(grating(p.out_cycles), p.dilation, wid));
      REQUIRE(e_in > 0.0);
      REQUIRE(e_in / (e_out + 1e-300) > 1.0);
    }
  }

  // Bit-determinism across two full pipeline runs, trace included.
  {
    const FeatureMap low = random_map(C, 12, 10, 22);
    const FeatureMap high = random_map(C, 6, 5, 44);
    PipelineTrace ta, tb;
    const FeatureMap a = run_pipeline(low, high, w, attn, &ta);
    const FeatureMap b = run_pipeline(low, high, w, attn, &tb);
    REQUIRE(map_identical(a, b));
    REQUIRE(ta.stages.size() == tb.stages.size());
    for (size_t i = 0; i < ta.stages.size(); ++i) {
      REQUIRE(ta.stages[i].first == tb.stages[i].first);
      REQUIRE(map_identical(ta.stages[i].second, tb.stages[i].second));
    }
  }

  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 30.0, "criterion 4 exceeded its 30s budget: %.2fs", dt);
  std::printf(
      "[PASS] criterion 4: compensation stages (zeros, gates, additivity, kernels, bands, "
      "determinism) (%.2fs)\n",
      dt);
}

// --- criterion 5: metrics vs brute-force reference -------------------------

refm::Grid to_ref(const RealGrid& g) {
  refm::Grid out(static_cast<size_t>(g.rows()),
                 std::vector<double>(static_cast<size_t>(g.cols())));
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      out[static_cast<size_t>(r)][static_cast<size_t>(c)] = g(r, c);
  return out;
}

refm::Mask to_ref_mask(const BoolGrid& g) {
  refm::Mask out(static_cast<size_t>(g.rows()),
                 std::vector<bool>(static_cast<size_t>(g.cols())));
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      out[static_cast<size_t>(r)][static_cast<size_t>(c)] = g(r, c);
  return out;
}

void criterion5() {
  using namespace wpc::metrics;
  Timer timer;

  // Exhaustive: all 512 binary 3x3 predictions against a fixed ground truth
  // must match the straight-line reference implementation exactly.
  {
    RealGrid gt(3, 3);
    gt << 1, 0, 0, 0, 1, 1, 0, 0, 0;
    const refm::Mask rgt = to_ref_mask(binarize_mask(gt));
    for (int bits = 0; bits < 512; ++bits) {
      RealGrid pred(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) pred(r, c) = (bits >> (r * 3 + c)) & 1 ? 1.0 : 0.0;
      const refm::Grid rpred = to_ref(pred);
      const EvalReport rep = evaluate_pair(pred, gt, /*normalize=*/false);
      REQUIRE(rep.valid);
      REQUIRE(rep.mae == refm::mae(rpred, rgt));
      const refm::FSummary fsum = refm::f_sweep(rpred, rgt);
      REQUIRE(rep.max_f == fsum.max_f);
      REQUIRE(rep.mean_f == fsum.mean_f);
      REQUIRE(rep.weighted_f == refm::weighted_f(rpred, rgt));
      REQUIRE(rep.s_measure == refm::s_measure(rpred, rgt));
      REQUIRE(rep.e_measure == refm::e_measure(rpred, rgt));
    }
  }

  // Identity pairs score perfectly.
  {
    RealGrid gt = RealGrid::Zero(8, 8);
    gt.block(2, 2, 3, 4).setConstant(1.0);
    const EvalReport rep = evaluate_pair(gt, gt);
    REQUIRE(rep.mae == 0.0);
    REQUIRE(rep.max_f == 1.0);
    REQUIRE(std::abs(rep.s_measure - 1.0) <= 1e-12);
    REQUIRE(std::abs(rep.e_measure - 1.0) <= 1e-12);
  }

  // Hand case: precision 1, recall 1/2 gives F = 1.3 * 0.5 / 0.8 = 0.8125.
  {
    RealGrid gt = RealGrid::Zero(4, 4);
    gt(1, 1) = 1.0;
    gt(2, 2) = 1.0;
    RealGrid pred = RealGrid::Zero(4, 4);
    pred(1, 1) = 1.0;
    const EvalReport rep = evaluate_pair(pred, gt, /*normalize=*/false);
    REQUIRE(std::abs(rep.max_f - 0.8125) <= 1e-15);
  }

  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 30.0, "criterion 5 exceeded its 30s budget: %.2fs", dt);
  std::printf(
      "[PASS] criterion 5: metrics match the brute-force reference on all 512 cases + hand "
      "values (%.2fs)\n",
      dt);
}

// --- criterion 6: end-to-end CLI -------------------------------------------

std::string sh_run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return {};
  std::ostringstream os;
  os << "command failed (status " << status << "): " << cmd;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MSG(in.good(), "cannot open %s", p.string().c_str());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// One evaluate run of a single prediction image against the ground-truth
// mask; returns the aggregate MAE from the written report.
double eval_mae(const std::string& cli, const fs::path& dir, const fs::path& pred_img,
                const fs::path& gt_img) {
  const fs::path pd = dir / "pred", gd = dir / "gt", ed = dir / "ev";
  fs::remove_all(pd);
  fs::remove_all(gd);
  fs::remove_all(ed);
  fs::create_directories(pd);
  fs::create_directories(gd);
  fs::copy_file(pred_img, pd / "scene.pgm");
  fs::copy_file(gt_img, gd / "scene.pgm");
  const std::string err = sh_run(cli + " evaluate --pred " + pd.string() + " --gt " +
                                 gd.string() + " --out " + ed.string() + " >" +
                                 (dir / "eval_out.log").string() + " 2>" +
                                 (dir / "eval_err.log").string());
  REQUIRE_MSG(err.empty(), "%s", err.c_str());
  return read_json(ed / "report.json").at("aggregate").at("mae").get<double>();
}

void criterion6() {
  Timer timer;
  const char* cli_env = std::getenv("WPC_CLI");
  REQUIRE_MSG(cli_env != nullptr, "WPC_CLI is not set");
  const std::string cli = cli_env;

  const fs::path dir = fs::temp_directory_path() / "wpc_acceptance_c6";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Fixed transmissive scene: dark blobs on a bright field. The mask file is
  // frozen so --seed varies only the measurement noise.
  const double pitch = 1e-5, lambda = 633e-9, ztot = 0.0095;
  const fs::path mask_path = dir / "mask.pgm";
  {
    const RealGrid bin = speckle::make_object_mask(64, 64, 0.2, hash_seed(1010, 0x0b7ec7));
    io::save_pgm(mask_path.string(), RealGrid(1.0 - 0.5 * bin));
  }

  // Noise level pinned to the scene: sigma = 0.1 * rms(clean intensity) is by
  // definition a 20 dB measurement on this toolkit's SNR scale.
  double sigma = 0.0;
  {
    speckle::SceneConfig cfg;
    cfg.width = cfg.height = 64;
    cfg.pitch = pitch;
    cfg.wavelength = lambda;
    cfg.z1 = cfg.z2 = ztot / 2;
    cfg.object_mask = io::load_pgm(mask_path.string());
    cfg.noise = speckle::NoNoise{};
    const speckle::SimInstance clean = speckle::simulate(cfg);
    sigma = 0.1 * std::sqrt(clean.intensity.square().mean());
  }

  const fs::path scene_cfg = dir / "scene.json";
  {
    json scene;
    scene["scene"]["width"] = 64;
    scene["scene"]["height"] = 64;
    scene["scene"]["pitch_m"] = pitch;
    scene["scene"]["wavelength_m"] = lambda;
    scene["scene"]["z1_m"] = ztot / 2;
    scene["scene"]["z2_m"] = ztot / 2;
    scene["scene"]["object"]["mask_path"] = mask_path.string();
    scene["scene"]["noise"]["model"] = "gaussian";
    scene["scene"]["noise"]["sigma"] = sigma;
    io::write_text_file(scene_cfg.string(), scene.dump(2) + "\n");
  }

  const fs::path sim = dir / "sim", rec = dir / "rec";
  auto simulate_seed = [&](uint64_t seed, const fs::path& out) {
    fs::remove_all(out);
    const std::string err = sh_run(cli + " simulate --config " + scene_cfg.string() +
                                   " --out " + out.string() + " --seed " +
                                   std::to_string(seed) + " >" + (dir / "sim.log").string() +
                                   " 2>" + (dir / "sim_err.log").string());
    REQUIRE_MSG(err.empty(), "%s", err.c_str());
  };
  auto reconstruct_into = [&](const fs::path& intensity, const fs::path& out) {
    json rc;
    rc["input"]["intensity_path"] = intensity.string();
    rc["propagation"]["wavelength_m"] = lambda;
    rc["propagation"]["distance_m"] = ztot;
    rc["solver"]["epsilon"] = 3.0;
    rc["solver"]["gamma"] = {0.5, 0.25, 0.125};
    io::write_text_file((dir / "rec.json").string(), rc.dump(2) + "\n");
    fs::remove_all(out);
    const std::string err = sh_run(cli + " reconstruct --config " +
                                   (dir / "rec.json").string() + " --out " + out.string() +
                                   " >" + (dir / "rec.log").string() + " 2>" +
                                   (dir / "rec_err.log").string());
    REQUIRE_MSG(err.empty(), "%s", err.c_str());
  };

  int improved = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    simulate_seed(seed, sim);
    const json sidecar = read_json(sim / "scene.json");
    const double snr = sidecar.at("snr_db").get<double>();
    REQUIRE_MSG(std::abs(snr - 20.0) <= 0.2, "seed %llu realized %.3f dB",
                static_cast<unsigned long long>(seed), snr);
    reconstruct_into(sim / "intensity.wpcf", rec);
    const double mae_final =
        eval_mae(cli, dir, rec / "reconstruction.pgm", sim / "object_mask.pgm");
    const double mae_init =
        eval_mae(cli, dir, rec / "initializer.pgm", sim / "object_mask.pgm");
    if (mae_final < mae_init) ++improved;
  }
  REQUIRE_MSG(improved >= 80, "reconstruction beat the initializer on only %d/100 seeds",
              improved);

  // Identical seeds must reproduce byte-identical artifacts.
  {
    const fs::path sa = dir / "rerun_a", sb = dir / "rerun_b";
    simulate_seed(7, sa);
    simulate_seed(7, sb);
    for (const char* name :
         {"ground_truth.wpcf", "intensity.wpcf", "intensity.pgm", "object_mask.pgm",
          "scene.json"})
      REQUIRE_MSG(slurp(sa / name) == slurp(sb / name), "simulate artifact %s differs", name);

    const fs::path ra = dir / "rerun_ra", rb = dir / "rerun_rb";
    reconstruct_into(sa / "intensity.wpcf", ra);
    reconstruct_into(sa / "intensity.wpcf", rb);
    for (const char* name : {"psi_init.wpcf", "initializer.pgm", "psi_final.wpcf",
                             "reconstruction.pgm", "reconstruct_log.json"})
      REQUIRE_MSG(slurp(ra / name) == slurp(rb / name), "reconstruct artifact %s differs",
                  name);
  }

  const double dt = timer.seconds();
  REQUIRE_MSG(dt < 300.0, "criterion 6 exceeded its 5min budget: %.2fs", dt);
  std::printf(
      "[PASS] criterion 6: end-to-end CLI improved the initializer on %d/100 seeds, "
      "byte-identical reruns (%.2fs)\n",
      improved, dt);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  std::printf("acceptance: all 6 criteria passed\n");
  return 0;
}
