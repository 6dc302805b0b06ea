#include "wpc/fresnel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace wpc {

namespace {

constexpr double kPi = std::numbers::pi;

enum class TransferKind { kForward, kAdjoint, kProject };

// Shared spectral pipeline for propagate / adjoint_propagate /
// project_subspace: forward transform, per-bin mask, inverse transform.
ComplexField spectral_apply(const ComplexField& u, const PropagationSpec& spec,
                            TransferKind kind, const char* op) {
  validate(u, op);
  validate(spec);
  if (spec.distance == 0.0) return u;  // identity propagation

  const TransferMask mask = transfer_mask(spec, frequency_grid(u.width(), u.height(), u.pitch));
  ComplexField s = forward_spectrum(u);
  switch (kind) {
    case TransferKind::kForward:
      s.data *= mask.values;
      break;
    case TransferKind::kAdjoint:
      s.data *= mask.values.conjugate();
      break;
    case TransferKind::kProject:
      for (Eigen::Index c = 0; c < s.data.cols(); ++c) {
        for (Eigen::Index r = 0; r < s.data.rows(); ++r) {
          if (!mask.passband(r, c)) s.data(r, c) = Complex(0.0, 0.0);
        }
      }
      break;
  }
  return inverse_spectrum(s);
}

}  // namespace

double PropagationSpec::wavenumber() const { return 2.0 * kPi / wavelength; }

PropagationSpec make_spec(double wavelength, double distance) {
  PropagationSpec spec{wavelength, distance};
  validate(spec);
  return spec;
}

void validate(const PropagationSpec& spec) {
  if (!(spec.wavelength > 0.0) || !std::isfinite(spec.wavelength)) {
    fail(errc::invalid_argument, "propagation spec: wavelength must be finite and > 0");
  }
  if (!(spec.distance >= 0.0) || !std::isfinite(spec.distance)) {
    fail(errc::invalid_argument, "propagation spec: distance must be finite and >= 0");
  }
}

TransferMask transfer_mask(const PropagationSpec& spec, const FrequencyGrid& grid) {
  validate(spec);
  const Eigen::Index h = grid.fy.size();
  const Eigen::Index w = grid.fx.size();
  TransferMask mask;
  mask.values = ComplexGrid(h, w);
  mask.passband = BoolGrid(h, w);
  if (spec.distance == 0.0) {
    mask.values.setConstant(Complex(1.0, 0.0));
    mask.passband.setConstant(true);
    return mask;
  }
  const double lz = spec.wavelength * spec.distance;
  const double limit = 1.0 / lz;  // passband: ||f||^2 <= 1/(lambda z), inclusive
  const RealGrid nsq = grid.norm_squared();
  for (Eigen::Index c = 0; c < w; ++c) {
    for (Eigen::Index r = 0; r < h; ++r) {
      const bool in = nsq(r, c) <= limit;
      mask.passband(r, c) = in;
      mask.values(r, c) = in ? std::exp(Complex(0.0, -kPi * lz * nsq(r, c))) : Complex(0.0, 0.0);
    }
  }
  return mask;
}

ComplexField propagate(const ComplexField& u, const PropagationSpec& spec) {
  return spectral_apply(u, spec, TransferKind::kForward, "propagate");
}

ComplexField adjoint_propagate(const ComplexField& u, const PropagationSpec& spec) {
  return spectral_apply(u, spec, TransferKind::kAdjoint, "adjoint_propagate");
}

ComplexField project_subspace(const ComplexField& u, const PropagationSpec& spec) {
  return spectral_apply(u, spec, TransferKind::kProject, "project_subspace");
}

ComplexField apply_transfer(const ComplexField& u, const TransferMask& mask) {
  validate(u, "apply_transfer");
  if (mask.values.rows() != u.data.rows() || mask.values.cols() != u.data.cols()) {
    fail(errc::shape_mismatch, "apply_transfer: mask shape does not match field");
  }
  ComplexField s = forward_spectrum(u);
  s.data *= mask.values;
  return inverse_spectrum(s);
}

bool fresnel_sampling_satisfied(const ComplexField& u, const PropagationSpec& spec) {
  validate(u, "fresnel_sampling_satisfied");
  validate(spec);
  const double n = static_cast<double>(std::min(u.width(), u.height()));
  return n * u.pitch * u.pitch >= spec.wavelength * spec.distance;
}

double out_of_band_fraction(const ComplexField& u, const PropagationSpec& spec) {
  validate(u, "out_of_band_fraction");
  validate(spec);
  const double total = l2_norm(u);
  if (total == 0.0) return 0.0;
  if (spec.distance == 0.0) return 0.0;  // full passband
  const TransferMask mask = transfer_mask(spec, frequency_grid(u.width(), u.height(), u.pitch));
  const ComplexField s = forward_spectrum(u);
  double out = 0.0;
  for (Eigen::Index c = 0; c < s.data.cols(); ++c) {
    for (Eigen::Index r = 0; r < s.data.rows(); ++r) {
      if (!mask.passband(r, c)) out += std::norm(s.data(r, c));
    }
  }
  return std::sqrt(out) / total;
}

ComplexField direct_fresnel_oracle(const ComplexField& u, const PropagationSpec& spec) {
  validate(u, "direct_fresnel_oracle");
  validate(spec);
  if (!(spec.distance > 0.0)) {
    fail(errc::invalid_argument, "direct_fresnel_oracle: distance must be > 0");
  }
  if (u.width() > 64 || u.height() > 64) {
    fail(errc::invalid_argument, "direct_fresnel_oracle: grid capped at 64x64");
  }
  const int w = u.width();
  const int h = u.height();
  const double z = spec.distance;
  const double k = spec.wavenumber();
  const double p = u.pitch;

  // The chirp factorizes over axes: exp(i k (dx^2+dy^2)/(2z)) =
  // exp(i k dx^2/(2z)) * exp(i k dy^2/(2z)); precompute per-axis tables.
  auto chirp_table = [&](int n) {
    std::vector<Complex> t(static_cast<size_t>(n));
    for (int d = 0; d < n; ++d) {
      const double s = static_cast<double>(d) * p;
      t[static_cast<size_t>(d)] = std::exp(Complex(0.0, k * s * s / (2.0 * z)));
    }
    return t;
  };
  const std::vector<Complex> cx = chirp_table(w);
  const std::vector<Complex> cy = chirp_table(h);

  const Complex prefactor =
      std::exp(Complex(0.0, k * z)) / (Complex(0.0, 1.0) * spec.wavelength * z);
  const double area = p * p;

  ComplexField out = zeros_like(u);
  for (int r2 = 0; r2 < h; ++r2) {
    for (int c2 = 0; c2 < w; ++c2) {
      Complex acc(0.0, 0.0);
      for (int r = 0; r < h; ++r) {
        const Complex ky = cy[static_cast<size_t>(std::abs(r2 - r))];
        for (int c = 0; c < w; ++c) {
          acc += u.data(r, c) * ky * cx[static_cast<size_t>(std::abs(c2 - c))];
        }
      }
      out.data(r2, c2) = prefactor * acc * area;
    }
  }
  return out;
}

ComplexField dense_operator_oracle(const ComplexField& u, const PropagationSpec& spec) {
  validate(u, "dense_operator_oracle");
  validate(spec);
  if (u.width() > 32 || u.height() > 32) {
    fail(errc::invalid_argument, "dense_operator_oracle: grid capped at 32x32");
  }
  const int w = u.width();
  const int h = u.height();

  // Unitary 1-D DFT matrix, entries exp(-2*pi*i*a*b/N)/sqrt(N).
  auto dft_matrix = [](int n) {
    Eigen::MatrixXcd d(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double ang = -2.0 * kPi * static_cast<double>(a) * static_cast<double>(b) /
                           static_cast<double>(n);
        d(a, b) = Complex(std::cos(ang), std::sin(ang)) * s;
      }
    }
    return d;
  };
  const Eigen::MatrixXcd dh = dft_matrix(h);
  const Eigen::MatrixXcd dw = dft_matrix(w);

  const Eigen::MatrixXcd um = u.data.matrix();
  Eigen::MatrixXcd spec_mat = dh * um * dw.transpose();

  const TransferMask mask = transfer_mask(spec, frequency_grid(w, h, u.pitch));
  spec_mat.array() *= mask.values;

  // Inverse of the row/column unitary transforms: D^H on the left,
  // conj(D) on the right.
  const Eigen::MatrixXcd outm = dh.adjoint() * spec_mat * dw.conjugate();
  ComplexField out = u;
  out.data = outm.array();
  return out;
}

}  // namespace wpc
