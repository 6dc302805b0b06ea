#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wpc/field.hpp"

namespace wpc::metrics {

// Binary-mask evaluation suite for saliency-style reconstruction quality.
// Predictions are continuous in [0, 1]; ground truth is binary. The measure
// definitions follow the de-facto community reference implementations
// (threshold sweeps, weighted errors, structure and alignment terms), with
// two intentional differences, both noted at the definition site: the
// enhanced-alignment score divides by the pixel count N rather than N - 1
// (keeping the score inside [0, 1] on small grids), and pairs whose ground
// truth is empty yield NaN structural scores plus valid = false instead of
// a fallback value.

struct EvalReport {
  double mae = 0.0;
  double max_f = 0.0;       // max over the 256-point threshold sweep
  double mean_f = 0.0;      // mean over the same sweep
  double weighted_f = 0.0;  // distance-weighted F (beta^2 = 1)
  double s_measure = 0.0;   // structure measure, alpha = 0.5
  double e_measure = 0.0;   // enhanced-alignment measure, adaptive threshold
  bool valid = true;        // false when the ground truth has no foreground
};

struct FCurve {
  Eigen::ArrayXd thresholds;  // i / 255 for i = 0..255
  Eigen::ArrayXd precision;
  Eigen::ArrayXd recall;
  Eigen::ArrayXd f;  // (1 + b2) P R / (b2 P + R), b2 = 0.3; 0 when degenerate
};

// Rescales to [0, 1] by min/max; a constant grid maps to all zeros.
RealGrid normalize_minmax(const RealGrid& x);

// Ground truth binarization: value >= 0.5 is foreground.
BoolGrid binarize_mask(const RealGrid& gt);

double mae(const RealGrid& pred, const BoolGrid& gt);

// Sweeps 256 thresholds t = i/255 binarizing with the strict comparison
// pred > t (so an all-zero prediction scores 0 at every threshold).
FCurve f_curve(const RealGrid& pred, const BoolGrid& gt);

// Weighted F: errors at background pixels are substituted from the nearest
// foreground pixel, blurred with a 7x7 sigma=5 Gaussian, and weighted by a
// distance decay 2 - exp(ln(0.5)/5 * D) away from the foreground.
double weighted_f(const RealGrid& pred, const BoolGrid& gt);

// Structure measure: 0.5 * object term + 0.5 * region term (region term =
// area-weighted SSIM over the four quadrants about the foreground centroid).
double s_measure(const RealGrid& pred, const BoolGrid& gt);

// Enhanced-alignment measure: binarize at min(2 * mean(pred), 1) with >=,
// then average the enhanced alignment matrix ((align + 1)^2 / 4).
double e_measure(const RealGrid& pred, const BoolGrid& gt);

// Full suite. When normalize is set the prediction is min-max rescaled once
// up front; otherwise its values must already lie in [0, 1]. The ground
// truth grid is binarized at 0.5. Empty ground truth => structural scores
// NaN and valid = false (mae is still computed).
EvalReport evaluate_pair(const RealGrid& pred, const RealGrid& gt, bool normalize = true);

struct AggregateReport {
  int pairs_total = 0;
  int pairs_valid = 0;  // pairs with non-empty ground truth
  double mean_mae = 0.0;
  double mean_max_f = 0.0;
  double mean_mean_f = 0.0;
  double mean_weighted_f = 0.0;
  double mean_s_measure = 0.0;
  double mean_e_measure = 0.0;
};

// MAE averages over every pair; the structural measures average over the
// valid pairs only. Requires at least one report.
AggregateReport aggregate(const std::vector<EvalReport>& reports);

// Exact nearest-foreground transform: for every pixel, the Euclidean
// distance to the closest ground-truth pixel and that pixel's row-major
// linear index (ties broken toward the smallest index). Requires at least
// one foreground pixel.
struct NearestForeground {
  RealGrid distance;
  Eigen::ArrayXXi index;
};
NearestForeground nearest_foreground(const BoolGrid& gt);

}  // namespace wpc::metrics
