#pragma once

#include <string>

#include "wpc/compensation.hpp"
#include "wpc/field.hpp"

namespace wpc::io {

// WPCF field container, version 1: magic bytes 'WPCF', u16 version, u32
// width, u32 height, f64 pitch, f64 wavelength (0 = unset), then
// height*width (re, im) f64 pairs in row-major order. Everything
// little-endian.
void save_field(const std::string& path, const ComplexField& f);
ComplexField load_field(const std::string& path);

// WPCF version 2: a u32 channel count follows the height, and the payload
// is C planes of (re, im) pairs. Feature maps are real, so the imaginary
// halves are written as zero and required to be zero on load.
void save_feature_map(const std::string& path, const comp::FeatureMap& f, double pitch = 1.0,
                      double wavelength = 0.0);
comp::FeatureMap load_feature_map(const std::string& path);

// PGM (P5). Writing emits 16-bit samples (maxval 65535, big-endian) from
// values clamped to [0, 1]; reading accepts 8- or 16-bit and rescales by
// the file's maxval to [0, 1].
void save_pgm(const std::string& path, const RealGrid& values);
RealGrid load_pgm(const std::string& path);

// Grayscale PNG (8/16-bit, alpha stripped, sub-byte depths expanded);
// color images are rejected. Values rescaled to [0, 1].
RealGrid load_png(const std::string& path);

// Dispatches on the file extension: .pgm / .png (case-insensitive).
RealGrid load_mask(const std::string& path);

// Learned-parameter container: a JSON manifest naming every tensor (name,
// rows, cols, offset) beside a raw little-endian f64 blob holding the
// values row-major. The blob sits next to the manifest with the same stem
// and a .bin extension. Loading verifies every shape and names the first
// offending tensor in its error message.
struct WeightsBundle {
  comp::BranchWeights weights;
  comp::AttentionConfig attention;
};

void save_weights(const std::string& manifest_path, const comp::BranchWeights& w,
                  const comp::AttentionConfig& attention);
WeightsBundle load_weights(const std::string& manifest_path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace wpc::io
