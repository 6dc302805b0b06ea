#pragma once

#include <Eigen/Dense>
#include <complex>

#include "wpc/errors.hpp"

namespace wpc {

using Complex = std::complex<double>;
using ComplexGrid = Eigen::ArrayXXcd;  // (row, col) = (y, x)
using RealGrid = Eigen::ArrayXXd;
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Sampled 2-D complex amplitude on a uniform grid with isotropic pixel pitch.
// data(row, col) is the sample at spatial position (col*pitch, row*pitch).
// Wavelength is carried as optional metadata (0 = unset); the propagation
// routines take the wavelength from their PropagationSpec argument instead.
struct ComplexField {
  ComplexGrid data;
  double pitch = 1.0;       // meters per pixel, > 0
  double wavelength = 0.0;  // meters, 0 when unset

  int width() const { return static_cast<int>(data.cols()); }
  int height() const { return static_cast<int>(data.rows()); }
};

ComplexField make_field(int width, int height, double pitch, double wavelength = 0.0);
ComplexField zeros_like(const ComplexField& f);
ComplexField from_real(const RealGrid& values, double pitch, double wavelength = 0.0);

// Throws on non-finite samples, empty grid, or non-positive pitch.
void validate(const ComplexField& f, const char* what = "field");
bool all_finite(const ComplexGrid& g);
bool all_finite(const RealGrid& g);

// Spatial frequencies along each axis in DFT bin order (DC first): bin t maps
// to index j = t for t < ceil(N/2) and j = t - N otherwise, with frequency
// j / (N * pitch) cycles per meter. Maximum |f| is the Nyquist frequency
// 1/(2*pitch) (attained on even-sized axes).
struct FrequencyGrid {
  Eigen::ArrayXd fx;  // size = width
  Eigen::ArrayXd fy;  // size = height

  // ||f||^2 laid out as a height x width grid: fy(r)^2 + fx(c)^2.
  RealGrid norm_squared() const;
};

// Requires width, height >= 2 and finite pitch > 0.
FrequencyGrid frequency_grid(int width, int height, double pitch);

// Unitary 2-D DFT pair: both directions carry an overall 1/sqrt(W*H) so the
// transforms are exact isometries (Parseval holds with equality up to
// roundoff) and inverse_spectrum(forward_spectrum(u)) == u.
ComplexField forward_spectrum(const ComplexField& f);
ComplexField inverse_spectrum(const ComplexField& f);

double l2_norm(const ComplexField& f);
// sum conj(a) * b; conjugate-linear in the first argument.
Complex inner_product(const ComplexField& a, const ComplexField& b);

ComplexField add(const ComplexField& a, const ComplexField& b);
ComplexField subtract(const ComplexField& a, const ComplexField& b);
ComplexField scale(const ComplexField& f, Complex s);
ComplexField pointwise_multiply(const ComplexField& a, const ComplexField& b);

RealGrid magnitude_squared(const ComplexField& f);

}  // namespace wpc
