#pragma once

#include "wpc/field.hpp"

namespace wpc {

// Scalar paraxial propagation geometry. distance == 0 is the identity
// propagation (full passband).
struct PropagationSpec {
  double wavelength = 0.0;  // meters, > 0
  double distance = 0.0;    // meters, >= 0

  double wavenumber() const;  // 2*pi / wavelength
};

PropagationSpec make_spec(double wavelength, double distance);
void validate(const PropagationSpec& spec);

// Sampled paraxial transfer function exp(-i*pi*lambda*z*||f||^2) restricted
// to the band-limited passband ||f||^2 <= 1/(lambda*z) (boundary inclusive);
// values are exactly zero outside. z == 0 yields all-ones / all-true.
struct TransferMask {
  ComplexGrid values;
  BoolGrid passband;
};

TransferMask transfer_mask(const PropagationSpec& spec, const FrequencyGrid& grid);

// Band-limited transfer-function propagation T_z = F^-1 [chi * H * F].
// Unitary transforms make T_z an exact isometry on its passband.
ComplexField propagate(const ComplexField& u, const PropagationSpec& spec);
// Adjoint T_z^dagger (conjugate transfer on the same passband); exact adjoint
// of propagate under the inner_product convention.
ComplexField adjoint_propagate(const ComplexField& u, const PropagationSpec& spec);
// Orthogonal projector P = T^dagger T = F^-1 [chi * F]: idempotent,
// self-adjoint, and the identity on band-limited inputs.
ComplexField project_subspace(const ComplexField& u, const PropagationSpec& spec);

// Applies a precomputed mask (values only); useful when propagating many
// fields over one geometry. Masks are immutable and shareable.
ComplexField apply_transfer(const ComplexField& u, const TransferMask& mask);

// Advisory: the transfer-function discretization is well sampled when
// min(W, H) * pitch^2 >= lambda * z. Surfaced as metadata, never a failure.
bool fresnel_sampling_satisfied(const ComplexField& u, const PropagationSpec& spec);

// Relative spectral L2 mass outside the passband: ||(1-chi) F u|| / ||u||.
// Zero-norm input reports 0.
double out_of_band_fraction(const ComplexField& u, const PropagationSpec& spec);

// Independent oracles; both are deliberately implemented without the FFT
// path so they can arbitrate it.
//
// Direct Riemann quadrature of the Fresnel diffraction integral, including
// the global prefactor exp(i*k*z)/(i*lambda*z). O(N^4); grids are capped at
// 64x64 and z must be > 0.
ComplexField direct_fresnel_oracle(const ComplexField& u, const PropagationSpec& spec);
// Dense unitary DFT-matrix realization of the band-limited transfer
// operator. O(N^3) matrix products; grids capped at 32x32.
ComplexField dense_operator_oracle(const ComplexField& u, const PropagationSpec& spec);

}  // namespace wpc
