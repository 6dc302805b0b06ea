#include "wpc/triwcp.hpp"

#include <cmath>
#include <string>

namespace wpc {

namespace {

ComplexField default_adjoint(const ComplexField& f, const PropagationSpec& spec) {
  return adjoint_propagate(f, spec);
}

ComplexField apply_adjoint(const ComplexField& f, const SolverConfig& cfg,
                           const PropagationSpec& spec) {
  return cfg.generalized_adjoint ? cfg.generalized_adjoint(f) : default_adjoint(f, spec);
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    fail(errc::invalid_argument, "solver config: beta1 and beta2 must lie in [0, 1)");
  }
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    fail(errc::invalid_argument, "solver config: epsilon must be finite and > 0");
  }
  for (double g : cfg.gamma) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      fail(errc::invalid_argument, "solver config: gamma entries must be finite and > 0");
    }
  }
  if (!(cfg.smoothing_sigma_px > 0.0) || !std::isfinite(cfg.smoothing_sigma_px)) {
    fail(errc::invalid_argument, "solver config: smoothing sigma must be finite and > 0");
  }
  if (cfg.smoothing_radius_px < 1) {
    fail(errc::invalid_argument, "solver config: smoothing radius must be >= 1");
  }
}

RealGrid smoothing_kernel(double sigma_px, int radius_px) {
  if (!(sigma_px > 0.0) || !std::isfinite(sigma_px) || radius_px < 0) {
    fail(errc::invalid_argument, "smoothing_kernel: invalid sigma or radius");
  }
  const int n = 2 * radius_px + 1;
  RealGrid k(n, n);
  for (int dy = -radius_px; dy <= radius_px; ++dy) {
    for (int dx = -radius_px; dx <= radius_px; ++dx) {
      const double r2 = static_cast<double>(dx * dx + dy * dy);
      k(dy + radius_px, dx + radius_px) = std::exp(-r2 / (2.0 * sigma_px * sigma_px));
    }
  }
  k /= k.sum();
  return k;
}

ComplexGrid convolve_zero_padded(const ComplexGrid& in, const RealGrid& kernel) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int kr = static_cast<int>(kernel.rows()) / 2;
  const int kc = static_cast<int>(kernel.cols()) / 2;
  ComplexGrid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      Complex acc(0.0, 0.0);
      for (int dy = -kr; dy <= kr; ++dy) {
        const int rr = r - dy;
        if (rr < 0 || rr >= h) continue;
        for (int dx = -kc; dx <= kc; ++dx) {
          const int cc = c - dx;
          if (cc < 0 || cc >= w) continue;
          acc += kernel(dy + kr, dx + kc) * in(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

SolverState make_state(const ComplexField& psi0) {
  validate(psi0, "solver state");
  SolverState s;
  s.psi = psi0;
  s.m = zeros_like(psi0);
  s.v = RealGrid::Zero(psi0.data.rows(), psi0.data.cols());
  s.prev_residual = zeros_like(psi0);
  s.t = 0;
  return s;
}

void validate(const IntensityObjective& obj) {
  validate(obj.spec);
  if (obj.measured.size() == 0) {
    fail(errc::invalid_argument, "objective: empty measured intensity");
  }
  if (!all_finite(obj.measured) || (obj.measured < 0.0).any()) {
    fail(errc::invalid_argument, "objective: measured intensity must be finite and >= 0");
  }
  if (!(obj.pitch > 0.0) || !std::isfinite(obj.pitch)) {
    fail(errc::invalid_argument, "objective: pitch must be finite and > 0");
  }
}

double objective_value(const IntensityObjective& obj, const ComplexField& psi) {
  validate(obj);
  if (psi.data.rows() != obj.measured.rows() || psi.data.cols() != obj.measured.cols()) {
    fail(errc::shape_mismatch, "objective_value: iterate shape does not match measurement");
  }
  const ComplexField e = propagate(psi, obj.spec);
  return 0.5 * (magnitude_squared(e) - obj.measured).square().sum();
}

ComplexField gradient(const IntensityObjective& obj, const ComplexField& psi) {
  validate(obj);
  if (psi.data.rows() != obj.measured.rows() || psi.data.cols() != obj.measured.cols()) {
    fail(errc::shape_mismatch, "gradient: iterate shape does not match measurement");
  }
  const ComplexField e = propagate(psi, obj.spec);
  ComplexField mismatch = e;
  mismatch.data = (magnitude_squared(e) - obj.measured).cast<Complex>() * e.data;
  return adjoint_propagate(mismatch, obj.spec);
}

ComplexField residual(const ComplexField& g, const PropagationSpec& spec) {
  return subtract(g, project_subspace(g, spec));
}

ComplexField step_signal(const ComplexField& g, const SolverConfig& cfg,
                         const PropagationSpec& spec) {
  const ComplexField delta = residual(g, spec);
  const ComplexField back = apply_adjoint(delta, cfg, spec);
  if (cfg.momentum_source == MomentumSource::kResidualOnly) return back;
  return add(project_subspace(g, spec), back);
}

ComplexField momentum_step(const SolverState& state, const ComplexField& g,
                           const SolverConfig& cfg, const PropagationSpec& spec) {
  return add(scale(state.m, Complex(cfg.beta1, 0.0)), step_signal(g, cfg, spec));
}

RealGrid energy_step(const SolverState& state, const ComplexField& g, const SolverConfig& cfg,
                     const PropagationSpec& spec) {
  const ComplexField u = step_signal(g, cfg, spec);
  return cfg.beta2 * state.v + u.data.abs2();
}

ComplexField update_increment(const SolverState& state, const SolverConfig& cfg) {
  const RealGrid kernel = smoothing_kernel(cfg.smoothing_sigma_px, cfg.smoothing_radius_px);
  const ComplexGrid smoothed = convolve_zero_padded(state.prev_residual.data, kernel);
  ComplexField inc = state.m;
  inc.data = (state.m.data - smoothed) / (state.v.sqrt() + cfg.epsilon).cast<Complex>();
  return inc;
}

SolveResult run_triwcp(const ComplexField& psi0, const IntensityObjective& obj,
                       const SolverConfig& cfg) {
  validate(cfg);
  validate(psi0, "initial iterate");

  SolverState state = make_state(psi0);
  SolveResult result;
  result.initial_objective = objective_value(obj, psi0);

  for (int t = 1; t <= 3; ++t) {
    // gradient() may trip a validation inside the propagators when an
    // intermediate overflows; either way the diagnostic names the phase.
    ComplexField g;
    try {
      g = gradient(obj, state.psi);
    } catch (const Error& e) {
      if (e.code() == errc::non_finite) {
        fail(errc::non_finite, "run_triwcp: non-finite gradient at phase " + std::to_string(t));
      }
      throw;
    }
    if (!all_finite(g.data)) {
      fail(errc::non_finite, "run_triwcp: non-finite gradient at phase " + std::to_string(t));
    }
    const ComplexField delta = residual(g, obj.spec);
    state.m = momentum_step(state, g, cfg, obj.spec);
    state.v = energy_step(state, g, cfg, obj.spec);
    const ComplexField inc = update_increment(state, cfg);
    state.psi = subtract(state.psi, scale(inc, Complex(cfg.gamma[static_cast<size_t>(t - 1)], 0.0)));
    if (cfg.project_intermediates) state.psi = project_subspace(state.psi, obj.spec);
    if (!all_finite(state.psi.data)) {
      fail(errc::non_finite, "run_triwcp: non-finite iterate at phase " + std::to_string(t));
    }
    state.prev_residual = delta;
    state.t = t;
    result.phase_objectives[static_cast<size_t>(t - 1)] = objective_value(obj, state.psi);
  }

  result.psi_final = project_subspace(state.psi, obj.spec);
  if (!all_finite(result.psi_final.data)) {
    fail(errc::non_finite, "run_triwcp: non-finite final iterate");
  }
  result.final_objective = objective_value(obj, result.psi_final);
  return result;
}

}  // namespace wpc
