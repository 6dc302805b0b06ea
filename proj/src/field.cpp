#include "wpc/field.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <string>
#include <vector>

namespace wpc {

namespace {

void require_same_shape(const ComplexField& a, const ComplexField& b, const char* op) {
  if (a.width() != b.width() || a.height() != b.height()) {
    fail(errc::shape_mismatch, std::string(op) + ": operand shapes differ (" +
                                   std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                   " vs " + std::to_string(b.width()) + "x" +
                                   std::to_string(b.height()) + ")");
  }
  if (a.pitch != b.pitch) {
    fail(errc::shape_mismatch, std::string(op) + ": operand pitches differ");
  }
}

enum class Direction { kForward, kInverse };

// Separable 2-D DFT via 1-D transforms, Unscaled in both directions; the
// caller applies the unitary 1/sqrt(W*H) factor.
ComplexGrid transform2d(const ComplexGrid& in, Direction dir) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);

  ComplexGrid mid(h, w);
  std::vector<Complex> line(w), out(w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) line[static_cast<size_t>(c)] = in(r, c);
    if (dir == Direction::kForward) {
      fft.fwd(out, line);
    } else {
      fft.inv(out, line);
    }
    for (int c = 0; c < w; ++c) mid(r, c) = out[static_cast<size_t>(c)];
  }

  ComplexGrid res(h, w);
  line.resize(static_cast<size_t>(h));
  out.resize(static_cast<size_t>(h));
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) line[static_cast<size_t>(r)] = mid(r, c);
    if (dir == Direction::kForward) {
      fft.fwd(out, line);
    } else {
      fft.inv(out, line);
    }
    for (int r = 0; r < h; ++r) res(r, c) = out[static_cast<size_t>(r)];
  }
  return res;
}

ComplexField spectrum(const ComplexField& f, Direction dir, const char* op) {
  validate(f, op);
  ComplexField res = f;
  res.data = transform2d(f.data, dir);
  res.data *= 1.0 / std::sqrt(static_cast<double>(f.width()) * f.height());
  return res;
}

}  // namespace

ComplexField make_field(int width, int height, double pitch, double wavelength) {
  if (width < 1 || height < 1) {
    fail(errc::invalid_argument, "make_field: grid dimensions must be >= 1");
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    fail(errc::invalid_argument, "make_field: pitch must be finite and > 0");
  }
  ComplexField f;
  f.data = ComplexGrid::Zero(height, width);
  f.pitch = pitch;
  f.wavelength = wavelength;
  return f;
}

ComplexField zeros_like(const ComplexField& f) {
  ComplexField z = f;
  z.data.setZero();
  return z;
}

ComplexField from_real(const RealGrid& values, double pitch, double wavelength) {
  ComplexField f = make_field(static_cast<int>(values.cols()), static_cast<int>(values.rows()),
                              pitch, wavelength);
  f.data = values.cast<Complex>();
  return f;
}

bool all_finite(const ComplexGrid& g) {
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Complex v = g(r, c);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  }
  return true;
}

bool all_finite(const RealGrid& g) {
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (!std::isfinite(g(r, c))) return false;
    }
  }
  return true;
}

void validate(const ComplexField& f, const char* what) {
  if (f.data.size() == 0) {
    fail(errc::invalid_argument, std::string(what) + ": empty grid");
  }
  if (!(f.pitch > 0.0) || !std::isfinite(f.pitch)) {
    fail(errc::invalid_argument, std::string(what) + ": pitch must be finite and > 0");
  }
  if (!all_finite(f.data)) {
    fail(errc::non_finite, std::string(what) + ": non-finite sample");
  }
}

RealGrid FrequencyGrid::norm_squared() const {
  const Eigen::Index h = fy.size();
  const Eigen::Index w = fx.size();
  RealGrid nsq(h, w);
  for (Eigen::Index c = 0; c < w; ++c) {
    const double fx2 = fx(c) * fx(c);
    for (Eigen::Index r = 0; r < h; ++r) {
      nsq(r, c) = fy(r) * fy(r) + fx2;
    }
  }
  return nsq;
}

FrequencyGrid frequency_grid(int width, int height, double pitch) {
  if (width < 2 || height < 2) {
    fail(errc::invalid_argument, "frequency_grid: width and height must be >= 2");
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    fail(errc::invalid_argument, "frequency_grid: pitch must be finite and > 0");
  }
  auto axis = [pitch](int n) {
    Eigen::ArrayXd f(n);
    const int half = (n + 1) / 2;  // ceil(n/2)
    for (int t = 0; t < n; ++t) {
      const int j = (t < half) ? t : t - n;
      f(t) = static_cast<double>(j) / (static_cast<double>(n) * pitch);
    }
    return f;
  };
  FrequencyGrid g;
  g.fx = axis(width);
  g.fy = axis(height);
  return g;
}

ComplexField forward_spectrum(const ComplexField& f) {
  return spectrum(f, Direction::kForward, "forward_spectrum");
}

ComplexField inverse_spectrum(const ComplexField& f) {
  return spectrum(f, Direction::kInverse, "inverse_spectrum");
}

double l2_norm(const ComplexField& f) { return std::sqrt(f.data.abs2().sum()); }

Complex inner_product(const ComplexField& a, const ComplexField& b) {
  require_same_shape(a, b, "inner_product");
  return (a.data.conjugate() * b.data).sum();
}

ComplexField add(const ComplexField& a, const ComplexField& b) {
  require_same_shape(a, b, "add");
  ComplexField r = a;
  r.data = a.data + b.data;
  return r;
}

ComplexField subtract(const ComplexField& a, const ComplexField& b) {
  require_same_shape(a, b, "subtract");
  ComplexField r = a;
  r.data = a.data - b.data;
  return r;
}

ComplexField scale(const ComplexField& f, Complex s) {
  ComplexField r = f;
  r.data = f.data * s;
  return r;
}

ComplexField pointwise_multiply(const ComplexField& a, const ComplexField& b) {
  require_same_shape(a, b, "pointwise_multiply");
  ComplexField r = a;
  r.data = a.data * b.data;
  return r;
}

RealGrid magnitude_squared(const ComplexField& f) { return f.data.abs2(); }

}  // namespace wpc
