// Test-only reference computations, kept independent of the library paths
// they check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vqp/fem.hpp"
#include "vqp/quantizer.hpp"

namespace oracle {

inline Eigen::MatrixXd to_dense(const vqp::SparseMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.n, A.n);
  for (int i = 0; i < A.n; ++i) {
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      M(i, A.col_idx[k]) += A.vals[k];
    }
  }
  return M;
}

// Truncated double sine series for -Laplace(u) = 1 on the unit square with
// zero boundary data; `terms` odd frequencies per direction.
inline double sine_series_solution(double x, double y, int terms = 100) {
  const double pi = std::numbers::pi;
  double u = 0.0;
  for (int a = 0; a < terms; ++a) {
    const int j = 2 * a + 1;
    const double sx = std::sin(j * pi * x);
    for (int b = 0; b < terms; ++b) {
      const int k = 2 * b + 1;
      u += 16.0 / (pi * pi * pi * pi * j * k * (j * j + k * k)) * sx *
           std::sin(k * pi * y);
    }
  }
  return u;
}

// Exhaustive nearest-site scan, written without reference to vqp::assign.
inline int nearest_site(std::span<const double> x,
                        const std::vector<double>& sites, int P, int m) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int p = 0; p < P; ++p) {
    double d = 0.0;
    for (int k = 0; k < m; ++k) {
      const double t = x[k] - sites[static_cast<size_t>(p) * m + k];
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

// Mean squared distance of mapped points to the centroid chosen by `labels`.
inline double labeled_distortion(const std::vector<double>& pts, int n, int m,
                                 const std::vector<double>& centroids,
                                 const std::vector<int>& labels) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      const double t = pts[static_cast<size_t>(i) * m + k] -
                       centroids[static_cast<size_t>(labels[i]) * m + k];
      total += t * t;
    }
  }
  return total / n;
}

// Best two-cluster quantizer of a 1d point set by enumerating every
// assignment of points to two cells.
struct TwoClusterBest {
  double distortion = std::numeric_limits<double>::infinity();
  double center_a = 0.0, center_b = 0.0;
};

inline TwoClusterBest exhaustive_two_clusters(const std::vector<double>& pts) {
  const int n = static_cast<int>(pts.size());
  TwoClusterBest best;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    double sa = 0, sb = 0;
    int na = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sa += pts[i];
        ++na;
      } else {
        sb += pts[i];
        ++nb;
      }
    }
    const double ca = sa / na, cb = sb / nb;
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = (mask & (1u << i)) ? ca : cb;
      w += (pts[i] - c) * (pts[i] - c);
    }
    w /= n;
    if (w < best.distortion) best = {w, std::min(ca, cb), std::max(ca, cb)};
  }
  return best;
}

inline double spearman_rank_correlation(std::vector<double> a,
                                        std::vector<double> b) {
  const size_t n = a.size();
  auto ranks = [](std::vector<double> v) {
    std::vector<int> idx(v.size());
    for (size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int x, int y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(std::move(a)), rb = ranks(std::move(b));
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace oracle
