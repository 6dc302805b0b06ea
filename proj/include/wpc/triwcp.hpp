#pragma once

#include <array>
#include <functional>

#include "wpc/fresnel.hpp"

namespace wpc {

// Operator used as the generalized back-propagator inside the momentum
// recurrences. Empty means "adjoint_propagate at the objective's geometry".
// Multi-hop variants can be composed here (e.g. two chained adjoints).
using AdjointOp = std::function<ComplexField(const ComplexField&)>;

// What the momentum/energy accumulators track.
//
// The literal printed recurrence accumulates A'[g - P g] (ResidualOnly).
// With a band-limited A' that term is structurally zero -- A' o (I - P)
// annihilates every input because the passband indicator satisfies
// chi*(1-chi) = 0 -- so a solver driven by it cannot move. The default
// therefore accumulates the physically admissible gradient component plus
// that same residual term: u = P g + A'[g - P g]. For in-band gradients this
// reduces to g; for generalized (multi-hop) propagator hooks the residual
// term comes alive. See README ("Solver notes") for the full rationale.
enum class MomentumSource { kAdmissibleGradient, kResidualOnly };

struct SolverConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::array<double, 3> gamma{1.0, 0.5, 0.25};
  double smoothing_sigma_px = 1.5;  // residual corrector kernel
  int smoothing_radius_px = 3;      // truncation radius, pixels
  MomentumSource momentum_source = MomentumSource::kAdmissibleGradient;
  bool project_intermediates = false;  // evaluate gradients at projected iterates
  AdjointOp generalized_adjoint;       // empty => adjoint_propagate
};

void validate(const SolverConfig& cfg);

// Truncated, unit-mass (sums to exactly 1 after normalization) Gaussian
// kernel on a (2r+1)^2 footprint.
RealGrid smoothing_kernel(double sigma_px, int radius_px);

// Zero-padded discrete convolution of a complex grid with a real kernel.
ComplexGrid convolve_zero_padded(const ComplexGrid& in, const RealGrid& kernel);

// Running solver state. At t = 0 all accumulators are identically zero.
struct SolverState {
  ComplexField psi;            // current iterate
  ComplexField m;              // momentum accumulator
  RealGrid v;                  // energy accumulator, pointwise >= 0
  ComplexField prev_residual;  // delta^(t-1); zero field at t = 0
  int t = 0;                   // completed phases, 0..3
};

SolverState make_state(const ComplexField& psi0);

// Single-plane intensity-fidelity objective
//   L(psi) = 1/2 * || |T_z psi|^2 - measured ||_2^2
// with conjugate-Wirtinger gradient g = T_z'[(|E|^2 - measured) * E],
// E = T_z psi. Directional derivative along h is 2*Re<g, h>.
struct IntensityObjective {
  RealGrid measured;  // nonnegative intensities, height x width
  PropagationSpec spec;
  double pitch = 1.0;
};

void validate(const IntensityObjective& obj);

double objective_value(const IntensityObjective& obj, const ComplexField& psi);
ComplexField gradient(const IntensityObjective& obj, const ComplexField& psi);

// g - project_subspace(g): the out-of-band (non-physical) component.
ComplexField residual(const ComplexField& g, const PropagationSpec& spec);

// Accumulated step signal for one phase (see MomentumSource).
ComplexField step_signal(const ComplexField& g, const SolverConfig& cfg,
                         const PropagationSpec& spec);

// m(t) = beta1 * m(t-1) + u(t); returns the updated accumulator.
ComplexField momentum_step(const SolverState& state, const ComplexField& g,
                           const SolverConfig& cfg, const PropagationSpec& spec);
// v(t) = beta2 * v(t-1) + |u(t)|^2 pointwise; returns the updated accumulator.
RealGrid energy_step(const SolverState& state, const ComplexField& g, const SolverConfig& cfg,
                     const PropagationSpec& spec);
// Delta(t) = (m(t) - K * delta(t-1)) / (sqrt(v(t)) + epsilon), with K the
// unit-mass smoothing kernel applied by zero-padded convolution. The state
// must already hold the phase-t accumulators m, v and the *previous* phase's
// residual.
ComplexField update_increment(const SolverState& state, const SolverConfig& cfg);

struct SolveResult {
  ComplexField psi_final;
  double initial_objective = 0.0;
  std::array<double, 3> phase_objectives{};  // L after each of the 3 phases
  double final_objective = 0.0;
};

// Exactly three phases: at phase t the gradient is evaluated at the running
// iterate psi(t-1) = psi0 - sum_{tau<t} gamma_tau * Delta(tau); afterwards
// the accumulated iterate is projected onto the admissible subspace.
// Non-finite intermediates abort with the phase index in the diagnostic.
SolveResult run_triwcp(const ComplexField& psi0, const IntensityObjective& obj,
                       const SolverConfig& cfg);

}  // namespace wpc
