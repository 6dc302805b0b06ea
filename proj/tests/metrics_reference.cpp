#include "metrics_reference.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>

namespace refm {

namespace {

constexpr double kEps = DBL_EPSILON;

int rows_of(const Grid& g) { return static_cast<int>(g.size()); }
int cols_of(const Grid& g) { return static_cast<int>(g[0].size()); }

int count_fg(const Mask& gt) {
  int n = 0;
  for (const auto& row : gt)
    for (bool b : row) n += b ? 1 : 0;
  return n;
}

double grid_mean(const Grid& g) {
  double s = 0.0;
  for (const auto& row : g)
    for (double v : row) s += v;
  return s / (static_cast<double>(g.size()) * static_cast<double>(g[0].size()));
}

// Nearest foreground pixel by Euclidean distance; ties go to the smallest
// row-major linear index (a row-major scan with a strict < keeps the first,
// i.e. smallest-index, minimum).
void nearest_fg(const Mask& gt, Grid* dist, std::vector<std::vector<int>>* index) {
  const int rows = static_cast<int>(gt.size());
  const int cols = static_cast<int>(gt[0].size());
  dist->assign(rows, std::vector<double>(cols, 0.0));
  index->assign(rows, std::vector<int>(cols, 0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int64_t best_d2 = std::numeric_limits<int64_t>::max();
      int best_lin = 0;
      for (int r2 = 0; r2 < rows; ++r2)
        for (int c2 = 0; c2 < cols; ++c2) {
          if (!gt[r2][c2]) continue;
          const int64_t dr = r - r2;
          const int64_t dc = c - c2;
          const int64_t d2 = dr * dr + dc * dc;
          if (d2 < best_d2) {
            best_d2 = d2;
            best_lin = r2 * cols + c2;
          }
        }
      (*dist)[r][c] = std::sqrt(static_cast<double>(best_d2));
      (*index)[r][c] = best_lin;
    }
}

// 7x7 sigma = 5 Gaussian, normalized by the total kernel mass, applied as a
// zero-padded correlation.
Grid blur7(const Grid& x) {
  double kernel[7][7];
  double total = 0.0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const double w = std::exp(-(i * i + j * j) / (2.0 * 25.0));
      kernel[i + 3][j + 3] = w;
      total += w;
    }
  const int rows = rows_of(x);
  const int cols = cols_of(x);
  Grid out(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols), 0.0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -3; i <= 3; ++i) {
        const int rr = r + i;
        if (rr < 0 || rr >= rows) continue;
        for (int j = -3; j <= 3; ++j) {
          const int cc = c + j;
          if (cc < 0 || cc >= cols) continue;
          acc += kernel[i + 3][j + 3] * x[rr][cc];
        }
      }
      out[r][c] = acc / total;
    }
  return out;
}

// Mean / sample-std (N - 1) over the values where sel is true (row-major
// visiting order), then the object-term formula.
double object_score(const Grid& values, const Mask& sel) {
  std::vector<double> picked;
  const int rows = rows_of(values);
  const int cols = cols_of(values);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (sel[r][c]) picked.push_back(values[r][c]);
  if (picked.empty()) return 0.0;
  double x = 0.0;
  for (double v : picked) x += v;
  x /= static_cast<double>(picked.size());
  double sigma = 0.0;
  if (picked.size() >= 2) {
    double mean = 0.0;
    for (double v : picked) mean += v;
    mean /= static_cast<double>(picked.size());
    double ss = 0.0;
    for (double v : picked) ss += (v - mean) * (v - mean);
    sigma = std::sqrt(ss / static_cast<double>(picked.size() - 1));
  }
  return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

// SSIM-style block score with (N - 1 + eps) variance normalization.
double block_ssim(const Grid& pred, const Grid& gt, int r0, int nr, int c0, int nc) {
  const double n = static_cast<double>(nr) * static_cast<double>(nc);
  double x = 0.0, y = 0.0;
  for (int r = r0; r < r0 + nr; ++r)
    for (int c = c0; c < c0 + nc; ++c) {
      x += pred[r][c];
      y += gt[r][c];
    }
  x /= n;
  y /= n;
  double ssx = 0.0, ssy = 0.0, ssxy = 0.0;
  for (int r = r0; r < r0 + nr; ++r)
    for (int c = c0; c < c0 + nc; ++c) {
      const double dx = pred[r][c] - x;
      const double dy = gt[r][c] - y;
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

double mae(const Grid& pred, const Mask& gt) {
  const int rows = rows_of(pred);
  const int cols = cols_of(pred);
  double s = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) s += std::abs(pred[r][c] - (gt[r][c] ? 1.0 : 0.0));
  return s / (static_cast<double>(rows) * static_cast<double>(cols));
}

FSummary f_sweep(const Grid& pred, const Mask& gt) {
  const int rows = rows_of(pred);
  const int cols = cols_of(pred);
  const double npos = static_cast<double>(count_fg(gt));
  FSummary out;
  double fsum = 0.0;
  for (int i = 0; i < 256; ++i) {
    const double t = static_cast<double>(i) / 255.0;
    int tp = 0, predpos = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (pred[r][c] > t) {  // strict comparison
          ++predpos;
          if (gt[r][c]) ++tp;
        }
    const double precision = predpos > 0 ? static_cast<double>(tp) / predpos : 0.0;
    const double recall = npos > 0.0 ? static_cast<double>(tp) / npos : 0.0;
    const double den = 0.3 * precision + recall;
    const double f = den > 0.0 ? (1.0 + 0.3) * precision * recall / den : 0.0;
    out.max_f = std::max(out.max_f, f);
    fsum += f;
  }
  out.mean_f = fsum / 256.0;
  return out;
}

double weighted_f(const Grid& pred, const Mask& gt) {
  const int rows = rows_of(pred);
  const int cols = cols_of(pred);
  const double npos = static_cast<double>(count_fg(gt));

  Grid err(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols), 0.0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) err[r][c] = std::abs(pred[r][c] - (gt[r][c] ? 1.0 : 0.0));

  Grid dist;
  std::vector<std::vector<int>> index;
  nearest_fg(gt, &dist, &index);

  Grid err_sub = err;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!gt[r][c]) {
        const int lin = index[r][c];
        err_sub[r][c] = err[lin / cols][lin % cols];
      }
  const Grid smoothed = blur7(err_sub);

  Grid min_err = err;
  Grid weight(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols), 1.0));
  const double decay = std::log(0.5) / 5.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (gt[r][c]) {
        if (smoothed[r][c] < err[r][c]) min_err[r][c] = smoothed[r][c];
      } else {
        weight[r][c] = 2.0 - std::exp(decay * dist[r][c]);
      }
    }

  double sum_fg = 0.0, sum_bg = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double ew = min_err[r][c] * weight[r][c];
      if (gt[r][c])
        sum_fg += ew;
      else
        sum_bg += ew;
    }

  const double tpw = npos - sum_fg;
  const double fpw = sum_bg;
  const double recall = 1.0 - sum_fg / npos;
  const double precision = tpw / (kEps + tpw + fpw);
  return 2.0 * recall * precision / (kEps + recall + precision);
}

double s_measure(const Grid& pred, const Mask& gt) {
  const int rows = rows_of(pred);
  const int cols = cols_of(pred);
  const double n = static_cast<double>(rows) * static_cast<double>(cols);
  const double total = static_cast<double>(count_fg(gt));
  const double coverage = total / n;
  if (coverage == 0.0) return 1.0 - grid_mean(pred);
  if (coverage == 1.0) return grid_mean(pred);

  Grid fg = pred, bg = pred;
  Mask not_gt(static_cast<size_t>(rows), std::vector<bool>(static_cast<size_t>(cols), false));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      bg[r][c] = 1.0 - pred[r][c];
      if (gt[r][c])
        bg[r][c] = 0.0;
      else
        fg[r][c] = 0.0;
      not_gt[r][c] = !gt[r][c];
    }
  const double object = coverage * object_score(fg, gt) + (1.0 - coverage) * object_score(bg, not_gt);

  double sx = 0.0, sy = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (gt[r][c]) {
        sx += c + 1;
        sy += r + 1;
      }
  const int cx = static_cast<int>(std::round(sx / total));
  const int cy = static_cast<int>(std::round(sy / total));

  Grid dgt(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols), 0.0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) dgt[r][c] = gt[r][c] ? 1.0 : 0.0;

  const int splits[4][4] = {
      {0, cy, 0, cx},
      {0, cy, cx, cols - cx},
      {cy, rows - cy, 0, cx},
      {cy, rows - cy, cx, cols - cx},
  };
  double region = 0.0;
  for (const auto& s : splits) {
    if (s[1] <= 0 || s[3] <= 0) continue;
    const double w = static_cast<double>(s[1]) * s[3] / n;
    region += w * block_ssim(pred, dgt, s[0], s[1], s[2], s[3]);
  }

  const double q = 0.5 * object + 0.5 * region;
  return q < 0.0 ? 0.0 : q;
}

double e_measure(const Grid& pred, const Mask& gt) {
  const int rows = rows_of(pred);
  const int cols = cols_of(pred);
  const double n = static_cast<double>(rows) * static_cast<double>(cols);
  const double th = std::min(2.0 * grid_mean(pred), 1.0);

  Grid fm(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols), 0.0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) fm[r][c] = pred[r][c] >= th ? 1.0 : 0.0;

  const int nfg = count_fg(gt);
  if (nfg == 0) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) s += 1.0 - fm[r][c];
    return s / n;
  }
  if (nfg == rows * cols) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) s += fm[r][c];
    return s / n;
  }

  const double fm_mean = grid_mean(fm);
  double g_mean = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g_mean += gt[r][c] ? 1.0 : 0.0;
  g_mean /= n;

  double total = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double dfm = fm[r][c] - fm_mean;
      const double dg = (gt[r][c] ? 1.0 : 0.0) - g_mean;
      const double align = 2.0 * dg * dfm / (dg * dg + dfm * dfm + kEps);
      const double e = (align + 1.0) * (align + 1.0) / 4.0;
      total += e;
    }
  return total / n;
}

}  // namespace refm
