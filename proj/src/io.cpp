#include "wpc/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

#include "wpc/errors.hpp"

namespace wpc::io {

namespace {

using nlohmann::json;

// --- little-endian byte packing ------------------------------------------

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t v = 0;
  std::memcpy(&v, &d, sizeof(v));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
  ByteReader(const std::string& data, std::string path)
      : data_(reinterpret_cast<const unsigned char*>(data.data())),
        size_(data.size()),
        path_(std::move(path)) {}

  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    double d = 0.0;
    std::memcpy(&d, &v, sizeof(d));
    return d;
  }

  void raw(void* dst, size_t n) {
    need(n);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  size_t remaining() const { return size_ - pos_; }

private:
  void need(size_t n) {
    if (size_ - pos_ < n) fail(errc::format_error, "'" + path_ + "': truncated file");
  }

  const unsigned char* data_;
  size_t size_;
  size_t pos_ = 0;
  std::string path_;
};

std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(errc::io_error, "error while reading '" + path + "'");
  return data;
}

void write_binary_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) fail(errc::io_error, "error while writing '" + path + "'");
}

constexpr char kMagic[4] = {'W', 'P', 'C', 'F'};

void check_magic(ByteReader& r, const std::string& path) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    fail(errc::format_error, "'" + path + "': not a WPCF file (bad magic)");
}

void check_dims(uint32_t width, uint32_t height, const std::string& path) {
  if (width == 0 || height == 0) fail(errc::format_error, "'" + path + "': zero dimension");
  if (width > (1u << 20) || height > (1u << 20))
    fail(errc::format_error, "'" + path + "': implausible dimensions");
}

// --- PGM ------------------------------------------------------------------

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(const std::string& data, size_t& pos, const std::string& path) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) &&
         data[pos] != '#')
    ++pos;
  if (start == pos) fail(errc::format_error, "'" + path + "': truncated PGM header");
  return data.substr(start, pos - start);
}

long pgm_number(const std::string& data, size_t& pos, const std::string& path) {
  const std::string tok = pgm_token(data, pos, path);
  try {
    size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(errc::format_error, "'" + path + "': bad PGM header token '" + tok + "'");
  }
}

// --- weights manifest -------------------------------------------------

const char* gate_name(comp::GateKind g) { return g == comp::GateKind::kRelu ? "relu" : "sigmoid"; }

comp::GateKind gate_from_name(const std::string& name, const std::string& path) {
  if (name == "relu") return comp::GateKind::kRelu;
  if (name == "sigmoid") return comp::GateKind::kSigmoid;
  fail(errc::format_error, "'" + path + "': unknown gate '" + name + "'");
}

struct TensorEntry {
  std::string name;
  int rows = 0;
  int cols = 0;
  size_t offset = 0;  // bytes into the blob
};

// Row-major append of a matrix to the blob, plus its manifest entry.
void append_tensor(std::string& blob, std::vector<TensorEntry>& entries, const std::string& name,
                   const Eigen::MatrixXd& m) {
  entries.push_back({name, static_cast<int>(m.rows()), static_cast<int>(m.cols()), blob.size()});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(blob, m(r, c));
}

Eigen::MatrixXd extract_tensor(const std::string& blob, const TensorEntry& e, int want_rows,
                               int want_cols, const std::string& path) {
  if (e.rows != want_rows || e.cols != want_cols)
    fail(errc::format_error, "'" + path + "': tensor '" + e.name + "' has shape " +
                                 std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                                 ", expected " + std::to_string(want_rows) + "x" +
                                 std::to_string(want_cols));
  const size_t count = static_cast<size_t>(e.rows) * static_cast<size_t>(e.cols);
  if (e.offset + 8 * count > blob.size())
    fail(errc::format_error, "'" + path + "': tensor '" + e.name + "' overruns the blob");
  Eigen::MatrixXd m(want_rows, want_cols);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(blob.data()) + e.offset;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
      p += 8;
      double d = 0.0;
      std::memcpy(&d, &v, sizeof(d));
      m(r, c) = d;
    }
  return m;
}

// The 3x3 depthwise kernels of one branch packed as a C x 9 matrix.
Eigen::MatrixXd pack_aux(const std::vector<Eigen::Matrix3d>& kernels) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(kernels.size()), 9);
  for (size_t c = 0; c < kernels.size(); ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(static_cast<Eigen::Index>(c), 3 * i + j) = kernels[c](i, j);
  return m;
}

std::vector<Eigen::Matrix3d> unpack_aux(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Matrix3d> kernels(static_cast<size_t>(m.rows()));
  for (Eigen::Index c = 0; c < m.rows(); ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) kernels[static_cast<size_t>(c)](i, j) = m(c, 3 * i + j);
  return kernels;
}

std::string blob_path_for(const std::string& manifest_path) {
  std::filesystem::path p(manifest_path);
  p.replace_extension(".bin");
  return p.string();
}

}  // namespace

// --- WPCF -------------------------------------------------------------

void save_field(const std::string& path, const ComplexField& f) {
  validate(f, "field");
  std::string out;
  out.reserve(30 + 16 * static_cast<size_t>(f.data.size()));
  out.append(kMagic, 4);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(f.width()));
  put_u32(out, static_cast<uint32_t>(f.height()));
  put_f64(out, f.pitch);
  put_f64(out, f.wavelength);
  for (Eigen::Index r = 0; r < f.data.rows(); ++r)
    for (Eigen::Index c = 0; c < f.data.cols(); ++c) {
      put_f64(out, f.data(r, c).real());
      put_f64(out, f.data(r, c).imag());
    }
  write_binary_file(path, out);
}

ComplexField load_field(const std::string& path) {
  const std::string data = read_binary_file(path);
  ByteReader r(data, path);
  check_magic(r, path);
  const uint16_t version = r.u16();
  if (version != 1)
    fail(errc::format_error,
         "'" + path + "': unsupported WPCF version " + std::to_string(version));
  const uint32_t width = r.u32();
  const uint32_t height = r.u32();
  check_dims(width, height, path);
  const double pitch = r.f64();
  const double wavelength = r.f64();
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    fail(errc::format_error, "'" + path + "': pitch must be positive");
  if (wavelength < 0.0 || !std::isfinite(wavelength))
    fail(errc::format_error, "'" + path + "': bad wavelength");
  ComplexField f = make_field(static_cast<int>(width), static_cast<int>(height), pitch, wavelength);
  for (Eigen::Index row = 0; row < f.data.rows(); ++row)
    for (Eigen::Index col = 0; col < f.data.cols(); ++col) {
      const double re = r.f64();
      const double im = r.f64();
      f.data(row, col) = Complex(re, im);
    }
  if (r.remaining() != 0) fail(errc::format_error, "'" + path + "': trailing bytes");
  validate(f, "field");
  return f;
}

void save_feature_map(const std::string& path, const comp::FeatureMap& f, double pitch,
                      double wavelength) {
  comp::validate(f, "feature map");
  if (!(pitch > 0.0)) fail(errc::invalid_argument, "pitch must be positive");
  std::string out;
  out.append(kMagic, 4);
  put_u16(out, 2);
  put_u32(out, static_cast<uint32_t>(f.width()));
  put_u32(out, static_cast<uint32_t>(f.height()));
  put_u32(out, static_cast<uint32_t>(f.channel_count()));
  put_f64(out, pitch);
  put_f64(out, wavelength);
  for (const RealGrid& plane : f.channels)
    for (Eigen::Index r = 0; r < plane.rows(); ++r)
      for (Eigen::Index c = 0; c < plane.cols(); ++c) {
        put_f64(out, plane(r, c));
        put_f64(out, 0.0);
      }
  write_binary_file(path, out);
}

comp::FeatureMap load_feature_map(const std::string& path) {
  const std::string data = read_binary_file(path);
  ByteReader r(data, path);
  check_magic(r, path);
  const uint16_t version = r.u16();
  if (version != 2)
    fail(errc::format_error,
         "'" + path + "': unsupported WPCF version " + std::to_string(version) +
             " (feature maps use version 2)");
  const uint32_t width = r.u32();
  const uint32_t height = r.u32();
  check_dims(width, height, path);
  const uint32_t channels = r.u32();
  if (channels == 0 || channels > (1u << 16))
    fail(errc::format_error, "'" + path + "': bad channel count");
  const double pitch = r.f64();
  (void)r.f64();  // wavelength, unused for feature maps
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    fail(errc::format_error, "'" + path + "': pitch must be positive");
  comp::FeatureMap f =
      comp::make_feature_map(static_cast<int>(channels), static_cast<int>(height),
                             static_cast<int>(width));
  for (RealGrid& plane : f.channels)
    for (Eigen::Index row = 0; row < plane.rows(); ++row)
      for (Eigen::Index col = 0; col < plane.cols(); ++col) {
        plane(row, col) = r.f64();
        if (r.f64() != 0.0)
          fail(errc::format_error, "'" + path + "': feature planes must be real-valued");
      }
  if (r.remaining() != 0) fail(errc::format_error, "'" + path + "': trailing bytes");
  comp::validate(f, "feature map");
  return f;
}

// --- PGM ----------------------------------------------------------------

void save_pgm(const std::string& path, const RealGrid& values) {
  if (values.size() == 0) fail(errc::invalid_argument, "empty grid");
  if (!all_finite(values)) fail(errc::non_finite, "grid contains non-finite values");
  std::string out = "P5\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) +
                    "\n65535\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double clamped = std::min(1.0, std::max(0.0, values(r, c)));
      const auto v = static_cast<uint16_t>(std::lround(clamped * 65535.0));
      out.push_back(static_cast<char>((v >> 8) & 0xff));  // PGM samples are big-endian
      out.push_back(static_cast<char>(v & 0xff));
    }
  write_binary_file(path, out);
}

RealGrid load_pgm(const std::string& path) {
  const std::string data = read_binary_file(path);
  size_t pos = 0;
  if (pgm_token(data, pos, path) != "P5")
    fail(errc::format_error, "'" + path + "': only binary (P5) PGM is supported");
  const long width = pgm_number(data, pos, path);
  const long height = pgm_number(data, pos, path);
  const long maxval = pgm_number(data, pos, path);
  if (width <= 0 || height <= 0) fail(errc::format_error, "'" + path + "': bad PGM dimensions");
  if (maxval <= 0 || maxval > 65535) fail(errc::format_error, "'" + path + "': bad PGM maxval");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    fail(errc::format_error, "'" + path + "': bad PGM header");
  ++pos;
  const int bytes = maxval < 256 ? 1 : 2;
  const size_t expect = static_cast<size_t>(width) * static_cast<size_t>(height) * bytes;
  if (data.size() - pos < expect) fail(errc::format_error, "'" + path + "': truncated PGM raster");
  RealGrid out(height, width);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + pos;
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      long v;
      if (bytes == 1) {
        v = *p++;
      } else {
        v = (static_cast<long>(p[0]) << 8) | p[1];
        p += 2;
      }
      out(r, c) = static_cast<double>(v) / static_cast<double>(maxval);
    }
  return out;
}

// --- PNG ----------------------------------------------------------------

RealGrid load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(errc::io_error, "cannot open '" + path + "' for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(fp);
    fail(errc::io_error, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(errc::format_error, "'" + path + "': malformed PNG");
  }
  png_init_io(png, fp);
  // Expand sub-byte gray depths, drop alpha; 16-bit stays big-endian and is
  // assembled by hand below.
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA, nullptr);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(errc::format_error, "'" + path + "': mask PNG must be 8- or 16-bit grayscale");
  }
  png_bytepp rows = png_get_rows(png, info);
  RealGrid out(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  const double scale = depth == 8 ? 255.0 : 65535.0;
  for (png_uint_32 r = 0; r < height; ++r) {
    const png_bytep row = rows[r];
    for (png_uint_32 c = 0; c < width; ++c) {
      const long v = depth == 8 ? row[c] : ((static_cast<long>(row[2 * c]) << 8) | row[2 * c + 1]);
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v / scale;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

RealGrid load_mask(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".png") return load_png(path);
  fail(errc::format_error, "'" + path + "': unsupported mask format (expected .pgm or .png)");
}

// --- weights ------------------------------------------------------------

void save_weights(const std::string& manifest_path, const comp::BranchWeights& w,
                  const comp::AttentionConfig& attention) {
  comp::validate(w);
  comp::validate(attention);
  if (attention.wq.rows() != w.channels)
    fail(errc::shape_mismatch, "attention projections do not match the weight channel count");

  std::string blob;
  std::vector<TensorEntry> entries;
  for (int m = 0; m < 3; ++m)
    append_tensor(blob, entries, "theta_" + std::to_string(m + 1), w.theta[m]);
  for (int m = 0; m < 3; ++m)
    append_tensor(blob, entries, "fusion_" + std::to_string(m + 1), w.fusion[m]);
  append_tensor(blob, entries, "phi_c", w.phi_c);
  append_tensor(blob, entries, "phi_sa", w.phi_sa);
  append_tensor(blob, entries, "psi_edge", w.psi_edge);
  append_tensor(blob, entries, "psi_sal", w.psi_sal);
  for (int k = 0; k < 3; ++k)
    append_tensor(blob, entries, "aux_" + std::to_string(k + 1), pack_aux(w.aux[k]));
  append_tensor(blob, entries, "attn_wq", attention.wq);
  append_tensor(blob, entries, "attn_wk", attention.wk);
  append_tensor(blob, entries, "attn_wv", attention.wv);

  const std::string blob_path = blob_path_for(manifest_path);
  json manifest;
  manifest["format"] = "wpc-weights";
  manifest["version"] = 1;
  manifest["channels"] = w.channels;
  manifest["gate"] = gate_name(w.gate);
  manifest["dilations"] = w.dilations;
  manifest["band_edges"] = w.band_edges;
  manifest["sigma"] = {
      {"branch", w.sigma_branch}, {"fuse", w.sigma_fuse}, {"mfeb", w.sigma_mfeb},
      {"c", w.sigma_c},           {"edge", w.sigma_edge}, {"ep", w.sigma_ep},
      {"sa", w.sigma_sa},         {"mea", w.sigma_mea},   {"sal", w.sigma_sal},
      {"final", w.sigma_final},
  };
  manifest["attention"] = {
      {"sigma_attn", attention.sigma_attn},
      {"window_radius", attention.window_radius},
      {"gate", gate_name(attention.gate)},
  };
  manifest["blob"] = std::filesystem::path(blob_path).filename().string();
  json tensors = json::array();
  for (const TensorEntry& e : entries)
    tensors.push_back({{"name", e.name}, {"rows", e.rows}, {"cols", e.cols}, {"offset", e.offset}});
  manifest["tensors"] = tensors;

  write_binary_file(blob_path, blob);
  write_text_file(manifest_path, manifest.dump(2) + "\n");
}

WeightsBundle load_weights(const std::string& manifest_path) {
  const std::string text = read_text_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    fail(errc::format_error, "'" + manifest_path + "': invalid JSON: " + e.what());
  }

  try {
    if (manifest.at("format").get<std::string>() != "wpc-weights")
      fail(errc::format_error, "'" + manifest_path + "': not a weights manifest");
    if (manifest.at("version").get<int>() != 1)
      fail(errc::format_error, "'" + manifest_path + "': unsupported manifest version");
    const int channels = manifest.at("channels").get<int>();
    if (channels < 1) fail(errc::format_error, "'" + manifest_path + "': bad channel count");

    const std::string blob_name = manifest.at("blob").get<std::string>();
    const std::string blob_path =
        (std::filesystem::path(manifest_path).parent_path() / blob_name).string();
    const std::string blob = read_binary_file(blob_path);

    std::vector<TensorEntry> entries;
    for (const json& t : manifest.at("tensors")) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      e.rows = t.at("rows").get<int>();
      e.cols = t.at("cols").get<int>();
      e.offset = t.at("offset").get<size_t>();
      if (e.rows < 0 || e.cols < 0)
        fail(errc::format_error,
             "'" + manifest_path + "': tensor '" + e.name + "' has negative shape");
      entries.push_back(std::move(e));
    }
    auto find = [&](const std::string& name) -> const TensorEntry& {
      for (const TensorEntry& e : entries)
        if (e.name == name) return e;
      fail(errc::format_error, "'" + manifest_path + "': missing tensor '" + name + "'");
    };

    WeightsBundle bundle;
    comp::BranchWeights& w = bundle.weights;
    w.channels = channels;
    w.gate = gate_from_name(manifest.at("gate").get<std::string>(), manifest_path);
    for (int m = 0; m < 3; ++m)
      w.theta[m] =
          extract_tensor(blob, find("theta_" + std::to_string(m + 1)), channels, channels,
                         manifest_path);
    for (int m = 0; m < 3; ++m)
      w.fusion[m] =
          extract_tensor(blob, find("fusion_" + std::to_string(m + 1)), channels, channels,
                         manifest_path);
    w.phi_c = extract_tensor(blob, find("phi_c"), channels, channels, manifest_path);
    w.phi_sa = extract_tensor(blob, find("phi_sa"), channels, 1, manifest_path);
    w.psi_edge = extract_tensor(blob, find("psi_edge"), channels, 1, manifest_path);
    w.psi_sal = extract_tensor(blob, find("psi_sal"), channels, channels, manifest_path);
    for (int k = 0; k < 3; ++k)
      w.aux[k] = unpack_aux(
          extract_tensor(blob, find("aux_" + std::to_string(k + 1)), channels, 9, manifest_path));

    if (manifest.contains("dilations")) {
      const auto d = manifest.at("dilations").get<std::vector<int>>();
      if (d.size() != 3) fail(errc::format_error, "'" + manifest_path + "': need 3 dilations");
      std::copy(d.begin(), d.end(), w.dilations.begin());
    }
    if (manifest.contains("band_edges")) {
      const auto b = manifest.at("band_edges").get<std::vector<double>>();
      if (b.size() != 2) fail(errc::format_error, "'" + manifest_path + "': need 2 band edges");
      std::copy(b.begin(), b.end(), w.band_edges.begin());
    }
    if (manifest.contains("sigma")) {
      const json& s = manifest.at("sigma");
      const auto branch = s.at("branch").get<std::vector<double>>();
      const auto mfeb = s.at("mfeb").get<std::vector<double>>();
      if (branch.size() != 3 || mfeb.size() != 3)
        fail(errc::format_error, "'" + manifest_path + "': sigma lists need 3 entries");
      std::copy(branch.begin(), branch.end(), w.sigma_branch.begin());
      std::copy(mfeb.begin(), mfeb.end(), w.sigma_mfeb.begin());
      w.sigma_fuse = s.at("fuse").get<double>();
      w.sigma_c = s.at("c").get<double>();
      w.sigma_edge = s.at("edge").get<double>();
      w.sigma_ep = s.at("ep").get<double>();
      w.sigma_sa = s.at("sa").get<double>();
      w.sigma_mea = s.at("mea").get<double>();
      w.sigma_sal = s.at("sal").get<double>();
      w.sigma_final = s.at("final").get<double>();
    }

    comp::AttentionConfig& attn = bundle.attention;
    const json& a = manifest.at("attention");
    attn.sigma_attn = a.at("sigma_attn").get<double>();
    attn.window_radius = a.at("window_radius").get<int>();
    attn.gate = gate_from_name(a.at("gate").get<std::string>(), manifest_path);
    attn.wq = extract_tensor(blob, find("attn_wq"), channels, channels, manifest_path);
    attn.wk = extract_tensor(blob, find("attn_wk"), channels, channels, manifest_path);
    attn.wv = extract_tensor(blob, find("attn_wv"), channels, channels, manifest_path);

    comp::validate(w);
    comp::validate(attn);
    return bundle;
  } catch (const json::exception& e) {
    fail(errc::format_error, "'" + manifest_path + "': bad manifest: " + e.what());
  }
}

// --- text files -----------------------------------------------------------

std::string read_text_file(const std::string& path) { return read_binary_file(path); }

void write_text_file(const std::string& path, const std::string& content) {
  write_binary_file(path, content);
}

}  // namespace wpc::io
