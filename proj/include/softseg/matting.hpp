#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/image.hpp"

namespace softseg {

// Sparse symmetric matrix in CSR form. Both (i,j) and (j,i) are stored, so
// multiply() is a plain CSR product. Rows of a matting Laplacian sum to zero
// and the matrix is positive semidefinite; tests check those properties on
// instances rather than the type enforcing them.
class SparseSymmetricMatrix {
 public:
  struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
  };

  SparseSymmetricMatrix() = default;

  SparseSymmetricMatrix(int n, std::vector<int> row_start,
                        std::vector<int> cols, std::vector<double> values)
      : n_(n),
        row_start_(std::move(row_start)),
        cols_(std::move(cols)),
        values_(std::move(values)) {}

  // Builds from upper-triangle triplets (row <= col); duplicates accumulate
  // and off-diagonal entries are mirrored.
  static SparseSymmetricMatrix from_upper_triplets(int n,
                                                   std::vector<Triplet> t) {
    for (auto& e : t) {
      if (e.row > e.col) std::swap(e.row, e.col);
      if (e.row < 0 || e.col >= n)
        throw Error("sparse matrix triplet out of range");
    }
    std::vector<Triplet> full;
    full.reserve(t.size() * 2);
    for (const auto& e : t) {
      full.push_back(e);
      if (e.row != e.col) full.push_back({e.col, e.row, e.value});
    }
    std::sort(full.begin(), full.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    std::vector<int> row_start(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> values;
    cols.reserve(full.size());
    values.reserve(full.size());
    for (std::size_t i = 0; i < full.size();) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < full.size() && full[j].row == full[i].row &&
             full[j].col == full[i].col)
        sum += full[j++].value;
      cols.push_back(full[i].col);
      values.push_back(sum);
      ++row_start[full[i].row + 1];
      i = j;
    }
    for (int r = 0; r < n; ++r) row_start[r + 1] += row_start[r];
    return SparseSymmetricMatrix(n, std::move(row_start), std::move(cols),
                                 std::move(values));
  }

  int n() const { return n_; }
  std::size_t nnz() const { return values_.size(); }

  double entry(int i, int j) const {
    for (int k = row_start_[i]; k < row_start_[i + 1]; ++k)
      if (cols_[k] == j) return values_[k];
    return 0.0;
  }

  double row_sum(int i) const {
    double s = 0.0;
    for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) s += values_[k];
    return s;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (int i = 0; i < n_; ++i) d[i] = entry(i, i);
    return d;
  }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int k = row_start_[i]; k < row_start_[i + 1]; ++k)
        acc += values_[k] * x[cols_[k]];
      y[i] = acc;
    }
  }

  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> y;
    multiply(x, y);
    return y;
  }

  double quadratic_form(const std::vector<double>& x) const {
    double q = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int k = row_start_[i]; k < row_start_[i + 1]; ++k)
        q += x[i] * values_[k] * x[cols_[k]];
    return q;
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(n_, std::vector<double>(n_, 0.0));
    for (int i = 0; i < n_; ++i)
      for (int k = row_start_[i]; k < row_start_[i + 1]; ++k)
        d[i][cols_[k]] = values_[k];
    return d;
  }

 private:
  int n_ = 0;
  std::vector<int> row_start_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

// Grayscale matting Laplacian over (2r+1)x(2r+1) windows fully inside the
// image. Each window with mean mu and population variance var contributes,
// for every ordered pixel pair (i,j) it contains,
//   delta_ij - (1/|w|) * (1 + (I_i - mu)(I_j - mu) / (var + eps/|w|)).
inline SparseSymmetricMatrix build_matting_laplacian(const GrayImage& img,
                                                     int window_radius = 1,
                                                     double eps = 1e-7) {
  if (window_radius < 1)
    throw Error("build_matting_laplacian: window radius must be >= 1");
  if (!(eps > 0.0)) throw Error("build_matting_laplacian: eps must be > 0");
  const int w = img.width(), h = img.height();
  const int span = 2 * window_radius + 1;
  if (w < span || h < span)
    throw Error("build_matting_laplacian: image smaller than one window");

  // Accumulate per-pixel bands: for pixel i the band holds coefficients for
  // neighbors at offsets (dx, dy) in [-2r, 2r]^2, in row-major offset order
  // so each CSR row comes out sorted by column.
  const int reach = 2 * window_radius;
  const int bw = 2 * reach + 1;
  const int bands = bw * bw;
  const std::size_t n = img.size();
  std::vector<double> acc(n * static_cast<std::size_t>(bands), 0.0);

  const int win_count = span * span;
  const double inv_count = 1.0 / win_count;
  std::vector<double> centered(win_count);

  for (int cy = window_radius; cy < h - window_radius; ++cy) {
    for (int cx = window_radius; cx < w - window_radius; ++cx) {
      double sum = 0.0, sq = 0.0;
      int t = 0;
      for (int dy = -window_radius; dy <= window_radius; ++dy)
        for (int dx = -window_radius; dx <= window_radius; ++dx) {
          const double v = img.at(cx + dx, cy + dy);
          centered[t++] = v;
          sum += v;
          sq += v * v;
        }
      const double mu = sum * inv_count;
      const double var = std::max(0.0, sq * inv_count - mu * mu);
      const double denom = var + eps * inv_count;
      for (int k = 0; k < win_count; ++k) centered[k] -= mu;

      t = 0;
      for (int dy = -window_radius; dy <= window_radius; ++dy)
        for (int dx = -window_radius; dx <= window_radius; ++dx, ++t) {
          const int ax = cx + dx, ay = cy + dy;
          const std::size_t base =
              img.index(ax, ay) * static_cast<std::size_t>(bands);
          const double ci = centered[t];
          int u = 0;
          for (int ey = -window_radius; ey <= window_radius; ++ey) {
            const std::size_t row_off =
                base + static_cast<std::size_t>(ey - dy + reach) * bw;
            for (int ex = -window_radius; ex <= window_radius; ++ex, ++u) {
              const double contrib =
                  (t == u ? 1.0 : 0.0) -
                  inv_count * (1.0 + ci * centered[u] / denom);
              acc[row_off + (ex - dx + reach)] += contrib;
            }
          }
        }
    }
  }

  // Emit CSR rows; offsets that stay inside the image are emitted even when
  // the accumulated value is zero so the pattern is symmetric.
  std::vector<int> row_start(n + 1, 0);
  std::vector<int> cols;
  std::vector<double> values;
  cols.reserve(n * bands / 2);
  values.reserve(n * bands / 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = img.index(x, y);
      const std::size_t base = i * static_cast<std::size_t>(bands);
      for (int dy = -reach; dy <= reach; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -reach; dx <= reach; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= w) continue;
          cols.push_back(static_cast<int>(img.index(nx, ny)));
          values.push_back(acc[base + std::size_t(dy + reach) * bw + (dx + reach)]);
        }
      }
      row_start[i + 1] = static_cast<int>(cols.size());
    }
  return SparseSymmetricMatrix(static_cast<int>(n), std::move(row_start),
                               std::move(cols), std::move(values));
}

inline void validate_trimap(const Trimap& trimap) {
  std::size_t fg = 0, bg = 0;
  for (auto l : trimap.data()) {
    fg += (l == TrimapLabel::Foreground);
    bg += (l == TrimapLabel::Background);
  }
  if (fg == 0) throw Error("trimap has no foreground pixels");
  if (bg == 0) throw Error("trimap has no background pixels");
}

struct SolveResult {
  SoftMask alpha;
  int iterations = 0;
  double residual = 0.0;  // final relative residual
};

// Solves (L + lambda_c D) alpha = lambda_c b with D the indicator diagonal of
// constrained (foreground or background) pixels and b the foreground
// indicator, by Jacobi-preconditioned conjugate gradients. The result is
// clamped to [0,1].
inline SolveResult solve_alpha(const SparseSymmetricMatrix& L,
                               const Trimap& trimap, double lambda_c = 100.0,
                               double tol = 1e-6, int max_iters = 2000) {
  if (L.n() != static_cast<int>(trimap.size()))
    throw Error("solve_alpha: Laplacian dimension does not match trimap");
  if (!(lambda_c > 0.0)) throw Error("solve_alpha: lambda_c must be > 0");
  validate_trimap(trimap);

  const int n = L.n();
  std::vector<double> rhs(n, 0.0), x(n, 0.5), diag = L.diagonal();
  for (int i = 0; i < n; ++i) {
    const TrimapLabel l = trimap.data()[i];
    if (l == TrimapLabel::Foreground) {
      rhs[i] = lambda_c;
      x[i] = 1.0;
      diag[i] += lambda_c;
    } else if (l == TrimapLabel::Background) {
      x[i] = 0.0;
      diag[i] += lambda_c;
    }
  }
  for (double& d : diag) d = std::max(d, 1e-12);

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    L.multiply(v, out);
    for (int i = 0; i < n; ++i)
      if (trimap.data()[i] != TrimapLabel::Unknown) out[i] += lambda_c * v[i];
  };

  const double rhs_norm = std::sqrt(std::inner_product(
      rhs.begin(), rhs.end(), rhs.begin(), 0.0));

  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(x, ap);
  for (int i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

  int iters = 0;
  double rel = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(),
                                            0.0)) / rhs_norm;
  while (rel > tol && iters < max_iters) {
    apply(p, ap);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (pap <= 0.0) break;  // numerically singular direction
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new =
        std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++iters;
    rel = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0)) /
          rhs_norm;
  }
  if (rel > tol)
    throw Error("solve_alpha: conjugate gradients did not reach tolerance " +
                std::to_string(tol) + " in " + std::to_string(max_iters) +
                " iterations (final relative residual " + std::to_string(rel) +
                ")");

  SoftMask alpha(trimap.width(), trimap.height());
  for (int i = 0; i < n; ++i) alpha.data()[i] = std::clamp(x[i], 0.0, 1.0);
  return {std::move(alpha), iters, rel};
}

struct MattingParams {
  int window_radius = 1;
  double eps = 1e-7;
  double lambda_c = 100.0;
  double tol = 1e-6;
  int max_iters = 2000;
};

struct MatteResult {
  SoftMask alpha;
  double laplacian_ms = 0.0;
  double solve_ms = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

// Trimap-constrained closed-form matting: Laplacian construction followed by
// the constrained solve, with wall-clock timings for both stages.
inline MatteResult matte(const GrayImage& img, const Trimap& trimap,
                         const MattingParams& params = {}) {
  check_same_dims(img, trimap, "matte");
  validate_trimap(trimap);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const SparseSymmetricMatrix L =
      build_matting_laplacian(img, params.window_radius, params.eps);
  const auto t1 = clock::now();
  SolveResult solved =
      solve_alpha(L, trimap, params.lambda_c, params.tol, params.max_iters);
  const auto t2 = clock::now();

  const auto ms = [](auto a, auto b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  return {std::move(solved.alpha), ms(t0, t1), ms(t1, t2), solved.iterations,
          solved.residual};
}

}  // namespace softseg
