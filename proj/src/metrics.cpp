#include "wpc/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include "wpc/errors.hpp"

namespace wpc::metrics {

namespace {

constexpr double kEps = DBL_EPSILON;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Row-major sum/mean, pinned accumulation order for bit-reproducibility.
double grid_sum(const RealGrid& g) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c) s += g(r, c);
  return s;
}

double grid_mean(const RealGrid& g) { return grid_sum(g) / static_cast<double>(g.size()); }

void require_pair(const RealGrid& pred, const BoolGrid& gt) {
  if (pred.rows() == 0 || pred.cols() == 0) fail(errc::invalid_argument, "empty grid");
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    fail(errc::shape_mismatch, "prediction and ground truth shapes differ");
  if (!all_finite(pred)) fail(errc::non_finite, "prediction contains non-finite values");
}

// Sample standard deviation (N - 1), 0 for fewer than two samples.
double sample_std(const std::vector<double>& v) {
  const size_t n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

// 7x7 sigma=5 normalized Gaussian, correlated with zero padding.
RealGrid blur7(const RealGrid& x) {
  constexpr int kR = 3;
  double kernel[7][7];
  double total = 0.0;
  for (int i = -kR; i <= kR; ++i)
    for (int j = -kR; j <= kR; ++j) {
      const double w = std::exp(-(i * i + j * j) / (2.0 * 25.0));
      kernel[i + kR][j + kR] = w;
      total += w;
    }
  const int rows = static_cast<int>(x.rows());
  const int cols = static_cast<int>(x.cols());
  RealGrid out = RealGrid::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -kR; i <= kR; ++i) {
        const int rr = r + i;
        if (rr < 0 || rr >= rows) continue;
        for (int j = -kR; j <= kR; ++j) {
          const int cc = c + j;
          if (cc < 0 || cc >= cols) continue;
          acc += kernel[i + kR][j + kR] * x(rr, cc);
        }
      }
      out(r, c) = acc / total;
    }
  return out;
}

// Object term of the structure measure over the pixels selected by `sel`.
double object_score(const RealGrid& values, const BoolGrid& sel) {
  std::vector<double> picked;
  picked.reserve(static_cast<size_t>(sel.count()));
  for (Eigen::Index r = 0; r < sel.rows(); ++r)
    for (Eigen::Index c = 0; c < sel.cols(); ++c)
      if (sel(r, c)) picked.push_back(values(r, c));
  if (picked.empty()) return 0.0;
  double x = 0.0;
  for (double v : picked) x += v;
  x /= static_cast<double>(picked.size());
  const double sigma = sample_std(picked);
  return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

// Structural similarity between a prediction block and a binary block,
// normalized with N - 1 (+eps so single-pixel blocks behave). Reductions are
// explicit row-major loops so results are reproducible bit-for-bit.
double block_ssim(const RealGrid& p, const RealGrid& g) {
  const double n = static_cast<double>(p.size());
  double x = 0.0, y = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      x += p(r, c);
      y += g(r, c);
    }
  x /= n;
  y /= n;
  double ssx = 0.0, ssy = 0.0, ssxy = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double dx = p(r, c) - x;
      const double dy = g(r, c) - y;
      ssx += dx * dx;
      ssy += dy * dy;
      ssxy += dx * dy;
    }
  const double sx = ssx / (n - 1.0 + kEps);
  const double sy = ssy / (n - 1.0 + kEps);
  const double sxy = ssxy / (n - 1.0 + kEps);
  const double a = 4.0 * x * y * sxy;
  const double b = (x * x + y * y) * (sx + sy);
  if (a != 0.0) return a / (b + kEps);
  if (b == 0.0) return 1.0;
  return 0.0;
}

}  // namespace

RealGrid normalize_minmax(const RealGrid& x) {
  if (x.size() == 0) fail(errc::invalid_argument, "empty grid");
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (!(hi > lo)) return RealGrid::Zero(x.rows(), x.cols());
  return (x - lo) / (hi - lo);
}

BoolGrid binarize_mask(const RealGrid& gt) { return gt >= 0.5; }

double mae(const RealGrid& pred, const BoolGrid& gt) {
  require_pair(pred, gt);
  const RealGrid dgt = gt.cast<double>();
  return grid_mean((pred - dgt).abs());
}

FCurve f_curve(const RealGrid& pred, const BoolGrid& gt) {
  require_pair(pred, gt);
  constexpr double kBeta2 = 0.3;
  FCurve curve;
  curve.thresholds.resize(256);
  curve.precision.resize(256);
  curve.recall.resize(256);
  curve.f.resize(256);
  const double npos = static_cast<double>(gt.count());
  for (int i = 0; i < 256; ++i) {
    const double t = static_cast<double>(i) / 255.0;
    curve.thresholds(i) = t;
    const BoolGrid bin = pred > t;  // strict: an all-zero prediction never fires
    const double tp = static_cast<double>((bin && gt).count());
    const double predpos = static_cast<double>(bin.count());
    const double precision = predpos > 0.0 ? tp / predpos : 0.0;
    const double recall = npos > 0.0 ? tp / npos : 0.0;
    curve.precision(i) = precision;
    curve.recall(i) = recall;
    const double den = kBeta2 * precision + recall;
    curve.f(i) = den > 0.0 ? (1.0 + kBeta2) * precision * recall / den : 0.0;
  }
  return curve;
}

NearestForeground nearest_foreground(const BoolGrid& gt) {
  const int rows = static_cast<int>(gt.rows());
  const int cols = static_cast<int>(gt.cols());
  if (!gt.any()) fail(errc::invalid_argument, "nearest_foreground: ground truth has no foreground");

  // Per column: the closest foreground row for every row (ties toward the
  // smaller row, which is also the smaller linear index within a column).
  Eigen::ArrayXXi col_best = Eigen::ArrayXXi::Constant(rows, cols, -1);
  std::vector<int> fg_cols;
  fg_cols.reserve(cols);
  std::vector<int> prev(rows), next(rows);
  for (int c = 0; c < cols; ++c) {
    bool any = false;
    int last = -1;
    for (int r = 0; r < rows; ++r) {
      if (gt(r, c)) {
        last = r;
        any = true;
      }
      prev[r] = last;
    }
    if (!any) continue;
    fg_cols.push_back(c);
    int nxt = -1;
    for (int r = rows - 1; r >= 0; --r) {
      if (gt(r, c)) nxt = r;
      next[r] = nxt;
    }
    for (int r = 0; r < rows; ++r) {
      const int p = prev[r];
      const int n = next[r];
      if (p < 0) {
        col_best(r, c) = n;
      } else if (n < 0) {
        col_best(r, c) = p;
      } else {
        col_best(r, c) = (r - p <= n - r) ? p : n;  // tie -> smaller row
      }
    }
  }

  NearestForeground out;
  out.distance.resize(rows, cols);
  out.index.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int64_t best_d2 = std::numeric_limits<int64_t>::max();
      int64_t best_lin = std::numeric_limits<int64_t>::max();
      for (int c2 : fg_cols) {
        const int br = col_best(r, c2);
        const int64_t dr = r - br;
        const int64_t dc = c - c2;
        const int64_t d2 = dr * dr + dc * dc;
        const int64_t lin = static_cast<int64_t>(br) * cols + c2;
        if (d2 < best_d2 || (d2 == best_d2 && lin < best_lin)) {
          best_d2 = d2;
          best_lin = lin;
        }
      }
      out.distance(r, c) = std::sqrt(static_cast<double>(best_d2));
      out.index(r, c) = static_cast<int>(best_lin);
    }
  return out;
}

double weighted_f(const RealGrid& pred, const BoolGrid& gt) {
  require_pair(pred, gt);
  if (!gt.any()) fail(errc::invalid_argument, "weighted_f: ground truth has no foreground");
  const int cols = static_cast<int>(gt.cols());
  const RealGrid dgt = gt.cast<double>();
  const RealGrid err = (pred - dgt).abs();

  // Substitute each background pixel's error with the error at its nearest
  // foreground pixel, then smooth.
  const NearestForeground nf = nearest_foreground(gt);
  RealGrid err_sub = err;
  for (Eigen::Index r = 0; r < gt.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.cols(); ++c)
      if (!gt(r, c)) {
        const int lin = nf.index(r, c);
        err_sub(r, c) = err(lin / cols, lin % cols);
      }
  const RealGrid smoothed = blur7(err_sub);

  RealGrid min_err = err;
  RealGrid weight = RealGrid::Ones(gt.rows(), gt.cols());
  const double decay = std::log(0.5) / 5.0;
  for (Eigen::Index r = 0; r < gt.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.cols(); ++c) {
      if (gt(r, c)) {
        if (smoothed(r, c) < err(r, c)) min_err(r, c) = smoothed(r, c);
      } else {
        weight(r, c) = 2.0 - std::exp(decay * nf.distance(r, c));
      }
    }
  const RealGrid ew = min_err * weight;

  double sum_fg = 0.0, sum_bg = 0.0;
  const double npos = static_cast<double>(gt.count());
  for (Eigen::Index r = 0; r < gt.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.cols(); ++c)
      (gt(r, c) ? sum_fg : sum_bg) += ew(r, c);

  const double tpw = npos - sum_fg;
  const double fpw = sum_bg;
  const double recall = 1.0 - sum_fg / npos;
  const double precision = tpw / (kEps + tpw + fpw);
  return 2.0 * recall * precision / (kEps + recall + precision);
}

double s_measure(const RealGrid& pred, const BoolGrid& gt) {
  require_pair(pred, gt);
  const int rows = static_cast<int>(gt.rows());
  const int cols = static_cast<int>(gt.cols());
  const double coverage = grid_mean(gt.cast<double>());
  if (coverage == 0.0) return 1.0 - grid_mean(pred);
  if (coverage == 1.0) return grid_mean(pred);

  // Object term: foreground response vs. inverted background response.
  RealGrid fg = pred;
  RealGrid bg = 1.0 - pred;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (gt(r, c))
        bg(r, c) = 0.0;
      else
        fg(r, c) = 0.0;
    }
  const double object = coverage * object_score(fg, gt) + (1.0 - coverage) * object_score(bg, !gt);

  // Region term: area-weighted SSIM over quadrants about the foreground
  // centroid (1-based coordinates, rounded half away from zero).
  const double total = grid_sum(gt.cast<double>());
  double sx = 0.0, sy = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (gt(r, c)) {
        sx += c + 1;
        sy += r + 1;
      }
  const int cx = static_cast<int>(std::round(sx / total));
  const int cy = static_cast<int>(std::round(sy / total));

  const RealGrid dgt = gt.cast<double>();
  const double area = static_cast<double>(rows) * cols;
  double region = 0.0;
  double weight_used = 0.0;
  const int splits[4][4] = {
      // row0, nrows, col0, ncols
      {0, cy, 0, cx},
      {0, cy, cx, cols - cx},
      {cy, rows - cy, 0, cx},
      {cy, rows - cy, cx, cols - cx},
  };
  for (const auto& s : splits) {
    if (s[1] <= 0 || s[3] <= 0) continue;  // zero-area quadrant carries no weight
    const double w = static_cast<double>(s[1]) * s[3] / area;
    const RealGrid pb = pred.block(s[0], s[2], s[1], s[3]);
    const RealGrid gb = dgt.block(s[0], s[2], s[1], s[3]);
    region += w * block_ssim(pb, gb);
    weight_used += w;
  }
  (void)weight_used;

  const double q = 0.5 * object + 0.5 * region;
  return q < 0.0 ? 0.0 : q;
}

double e_measure(const RealGrid& pred, const BoolGrid& gt) {
  require_pair(pred, gt);
  const double th = std::min(2.0 * grid_mean(pred), 1.0);
  const RealGrid fm = (pred >= th).cast<double>();
  const double n = static_cast<double>(gt.size());
  if (!gt.any()) return grid_sum(1.0 - fm) / n;
  if (gt.all()) return grid_sum(fm) / n;
  const RealGrid dgt = gt.cast<double>();
  const RealGrid dfm = fm - grid_mean(fm);
  const RealGrid dg = dgt - grid_mean(dgt);
  const RealGrid align = 2.0 * dg * dfm / (dg.square() + dfm.square() + kEps);
  // Mean of the enhanced alignment over all N pixels. (The usual reference
  // divides by N - 1, which exceeds 1 on small grids; dividing by N keeps
  // the score in [0, 1] and makes a perfect match score exactly 1.)
  // Row-major accumulation, pinned for reproducibility.
  double total = 0.0;
  for (Eigen::Index r = 0; r < align.rows(); ++r)
    for (Eigen::Index c = 0; c < align.cols(); ++c) {
      const double e = (align(r, c) + 1.0) * (align(r, c) + 1.0) / 4.0;
      total += e;
    }
  return total / n;
}

EvalReport evaluate_pair(const RealGrid& pred, const RealGrid& gt, bool normalize) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    fail(errc::shape_mismatch, "prediction and ground truth shapes differ");
  if (pred.size() == 0) fail(errc::invalid_argument, "empty grid");
  if (!all_finite(pred) || !all_finite(gt)) fail(errc::non_finite, "non-finite input");

  RealGrid p = normalize ? normalize_minmax(pred) : pred;
  if (!normalize && ((p < 0.0).any() || (p > 1.0).any()))
    fail(errc::invalid_argument, "prediction values must lie in [0, 1] when normalization is off");
  const BoolGrid g = binarize_mask(gt);

  EvalReport report;
  report.mae = mae(p, g);
  if (!g.any()) {
    report.valid = false;
    report.max_f = report.mean_f = report.weighted_f = kNaN;
    report.s_measure = report.e_measure = kNaN;
    return report;
  }
  const FCurve curve = f_curve(p, g);
  double fmax = 0.0, fsum = 0.0;  // explicit loop: pinned accumulation order
  for (int i = 0; i < 256; ++i) {
    fmax = std::max(fmax, curve.f(i));
    fsum += curve.f(i);
  }
  report.max_f = fmax;
  report.mean_f = fsum / 256.0;
  report.weighted_f = weighted_f(p, g);
  report.s_measure = s_measure(p, g);
  report.e_measure = e_measure(p, g);
  return report;
}

AggregateReport aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) fail(errc::invalid_argument, "aggregate: no reports");
  AggregateReport agg;
  agg.pairs_total = static_cast<int>(reports.size());
  for (const EvalReport& r : reports) {
    agg.mean_mae += r.mae;
    if (!r.valid) continue;
    ++agg.pairs_valid;
    agg.mean_max_f += r.max_f;
    agg.mean_mean_f += r.mean_f;
    agg.mean_weighted_f += r.weighted_f;
    agg.mean_s_measure += r.s_measure;
    agg.mean_e_measure += r.e_measure;
  }
  agg.mean_mae /= agg.pairs_total;
  if (agg.pairs_valid > 0) {
    agg.mean_max_f /= agg.pairs_valid;
    agg.mean_mean_f /= agg.pairs_valid;
    agg.mean_weighted_f /= agg.pairs_valid;
    agg.mean_s_measure /= agg.pairs_valid;
    agg.mean_e_measure /= agg.pairs_valid;
  } else {
    agg.mean_max_f = agg.mean_mean_f = agg.mean_weighted_f = kNaN;
    agg.mean_s_measure = agg.mean_e_measure = kNaN;
  }
  return agg;
}

}  // namespace wpc::metrics
