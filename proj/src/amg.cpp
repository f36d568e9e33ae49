// Smoothed-aggregation algebraic multigrid, applied as one symmetric V-cycle.
//
// Recipe: strength-of-connection filtering, greedy aggregation, a normalized
// piecewise-constant tentative prolongator smoothed by damped Jacobi, Galerkin
// coarse operators, weighted-Jacobi pre/post smoothing and a direct coarsest
// solve. Prolongator damping uses a power-iteration estimate of rho(D^{-1}A).

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "vqp/error.hpp"
#include "vqp/rng.hpp"
#include "vqp/solver.hpp"

namespace vqp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

SpMat to_eigen(const SparseMatrix& A) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.nnz());
  for (int i = 0; i < A.n; ++i) {
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      trip.emplace_back(i, A.col_idx[k], A.vals[k]);
    }
  }
  SpMat M(A.n, A.n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

// Greedy aggregation over the strength graph. Returns the aggregate id per
// node and the number of aggregates.
std::pair<std::vector<int>, int> aggregate(const SpMat& A, double theta) {
  const int n = static_cast<int>(A.rows());
  Vec diag = A.diagonal();

  std::vector<std::vector<int>> strong(n);
  for (int j = 0; j < n; ++j) {
    for (SpMat::InnerIterator it(A, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i == j) continue;
      if (std::abs(it.value()) >= theta * std::sqrt(diag(i) * diag(j))) {
        strong[i].push_back(j);
      }
    }
  }
  for (auto& s : strong) std::sort(s.begin(), s.end());

  std::vector<int> agg(n, -1);
  int count = 0;

  // pass 1: nodes whose strong neighborhood is untouched seed an aggregate
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    bool free = true;
    for (int j : strong[i]) {
      if (agg[j] >= 0) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    agg[i] = count;
    for (int j : strong[i]) agg[j] = count;
    ++count;
  }

  // pass 2: attach leftovers to the most strongly connected aggregate formed
  // in pass 1
  std::vector<int> pass1 = agg;
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    int best = -1;
    double best_w = -1.0;
    for (SpMat::InnerIterator it(A, i); it; ++it) {
      const int j = static_cast<int>(it.row());
      if (j == i || pass1[j] < 0) continue;
      if (!std::binary_search(strong[i].begin(), strong[i].end(), j)) continue;
      const double w = std::abs(it.value());
      if (w > best_w) {
        best_w = w;
        best = pass1[j];
      }
    }
    if (best >= 0) agg[i] = best;
  }

  // pass 3: anything still unassigned seeds an aggregate with its unassigned
  // strong neighbors
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    agg[i] = count;
    for (int j : strong[i]) {
      if (agg[j] < 0) agg[j] = count;
    }
    ++count;
  }
  return {agg, count};
}

double estimate_spectral_radius(const SpMat& A, const Vec& inv_diag,
                                int iterations) {
  const int n = static_cast<int>(A.rows());
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = uniform_open01(0x5ca1ab1eu, i, 0) - 0.5;
  }
  v.normalize();
  double rho = 1.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = inv_diag.asDiagonal() * (A * v);
    rho = w.norm();
    if (!(rho > 0.0)) return 1.0;
    v = w / rho;
  }
  return rho;
}

struct Level {
  SpMat A;
  Vec inv_diag;
  SpMat P;  // to the next (coarser) level; empty on the coarsest
};

class AmgPreconditioner final : public Preconditioner {
 public:
  AmgPreconditioner(const SparseMatrix& A_in, const AmgOptions& opt)
      : omega_(opt.jacobi_weight) {
    SpMat A = to_eigen(A_in);
    for (int depth = 0;; ++depth) {
      Level level;
      level.A = A;
      level.inv_diag = level.A.diagonal().cwiseInverse();
      if (!level.inv_diag.allFinite()) throw Error("not-spd");
      const int n = static_cast<int>(A.rows());

      const bool can_coarsen = depth + 1 < opt.max_levels && n > opt.coarse_size;
      if (!can_coarsen) {
        levels_.push_back(std::move(level));
        break;
      }

      auto [agg, n_coarse] = aggregate(A, opt.strength_threshold);
      if (n_coarse >= n) {  // aggregation collapse: truncate here
        levels_.push_back(std::move(level));
        break;
      }

      // tentative prolongator: piecewise constant, unit columns
      std::vector<int> agg_size(n_coarse, 0);
      for (int i = 0; i < n; ++i) agg_size[agg[i]] += 1;
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(n);
      for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, agg[i], 1.0 / std::sqrt(double(agg_size[agg[i]])));
      }
      SpMat tentative(n, n_coarse);
      tentative.setFromTriplets(trip.begin(), trip.end());

      const double rho =
          estimate_spectral_radius(A, level.inv_diag, opt.power_iterations);
      SpMat scaled = level.inv_diag.asDiagonal() * A;
      SpMat identity(n, n);
      identity.setIdentity();
      level.P = (identity - (opt.prolongator_damping / rho) * scaled) * tentative;

      A = SpMat(level.P.transpose() * level.A * level.P);
      A.makeCompressed();
      levels_.push_back(std::move(level));
    }

    // direct solve on the coarsest level when it is genuinely coarse (or the
    // whole problem is small); otherwise the cycle bottoms out in smoothing
    const Level& last = levels_.back();
    const int nc = static_cast<int>(last.A.rows());
    if (nc <= opt.coarse_size) {
      dense_factor_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(
          Eigen::MatrixXd(last.A));
      if (dense_factor_->info() != Eigen::Success) throw Error("not-spd");
    } else if (levels_.size() > 1) {
      sparse_factor_ = std::make_unique<Eigen::SimplicialLLT<SpMat>>(last.A);
      if (sparse_factor_->info() != Eigen::Success) throw Error("not-spd");
    }

    if (opt.level_sizes_out) {
      opt.level_sizes_out->clear();
      for (const Level& level : levels_) {
        opt.level_sizes_out->push_back(static_cast<int>(level.A.rows()));
      }
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    Eigen::Map<const Vec> rv(r.data(), r.size());
    Vec x = cycle(0, rv);
    Eigen::Map<Vec>(z.data(), z.size()) = x;
  }
  const char* kind() const override { return "amg"; }

 private:
  Vec cycle(size_t depth, const Vec& r) const {
    const Level& level = levels_[depth];
    if (depth + 1 == levels_.size()) {
      if (dense_factor_) return dense_factor_->solve(r);
      if (sparse_factor_) return sparse_factor_->solve(r);
      // smoother-only bottom: symmetric pair of weighted-Jacobi sweeps
      Vec x = omega_ * (level.inv_diag.asDiagonal() * r);
      x += omega_ * (level.inv_diag.asDiagonal() * (r - level.A * x));
      return x;
    }
    Vec x = omega_ * (level.inv_diag.asDiagonal() * r);  // pre-smooth from 0
    Vec residual = r - level.A * x;
    Vec coarse = cycle(depth + 1, level.P.transpose() * residual);
    x += level.P * coarse;
    x += omega_ * (level.inv_diag.asDiagonal() * (r - level.A * x));
    return x;
  }

  double omega_;
  std::vector<Level> levels_;
  std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_factor_;
  std::unique_ptr<Eigen::SimplicialLLT<SpMat>> sparse_factor_;
};

}  // namespace

std::unique_ptr<Preconditioner> build_amg(const SparseMatrix& A,
                                          const AmgOptions& options) {
  return std::make_unique<AmgPreconditioner>(A, options);
}

}  // namespace vqp
