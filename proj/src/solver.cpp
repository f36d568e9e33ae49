#include "vqp/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <queue>

#include "vqp/error.hpp"

namespace vqp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

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

// Reverse Cuthill-McKee: BFS from a minimum-degree start within each
// component, neighbors visited by increasing degree, order reversed.
std::vector<int> rcm_permutation(const SparseMatrix& A) {
  const int n = A.n;
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = A.row_ptr[i + 1] - A.row_ptr[i];
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  std::vector<int> by_degree(n);
  for (int i = 0; i < n; ++i) by_degree[i] = i;
  std::sort(by_degree.begin(), by_degree.end(), [&](int a, int b) {
    return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
  });
  std::vector<int> nbrs;
  for (int start : by_degree) {
    if (seen[start]) continue;
    seen[start] = 1;
    std::queue<int> queue;
    queue.push(start);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      order.push_back(u);
      nbrs.clear();
      for (int k = A.row_ptr[u]; k < A.row_ptr[u + 1]; ++k) {
        const int v = A.col_idx[k];
        if (v != u && !seen[v]) {
          seen[v] = 1;
          nbrs.push_back(v);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
        return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
      });
      for (int v : nbrs) queue.push(v);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;  // order[k] = original index of the k-th permuted row
}

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(std::span<const double> r, std::span<double> z) const override {
    std::copy(r.begin(), r.end(), z.begin());
  }
  const char* kind() const override { return "identity"; }
};

class CholeskyPreconditioner final : public Preconditioner {
 public:
  explicit CholeskyPreconditioner(const SparseMatrix& A) : perm_(rcm_permutation(A)) {
    const int n = A.n;
    inv_perm_.resize(n);
    for (int k = 0; k < n; ++k) inv_perm_[perm_[k]] = k;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nnz());
    for (int i = 0; i < n; ++i) {
      for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
        trip.emplace_back(inv_perm_[i], inv_perm_[A.col_idx[k]], A.vals[k]);
      }
    }
    SpMat P(n, n);
    P.setFromTriplets(trip.begin(), trip.end());
    llt_.compute(P);
    if (llt_.info() != Eigen::Success) throw Error("not-spd");
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    const int n = static_cast<int>(r.size());
    Eigen::VectorXd rp(n);
    for (int k = 0; k < n; ++k) rp(k) = r[perm_[k]];
    const Eigen::VectorXd zp = llt_.solve(rp);
    for (int k = 0; k < n; ++k) z[perm_[k]] = zp(k);
  }
  const char* kind() const override { return "cholesky"; }

 private:
  std::vector<int> perm_, inv_perm_;
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> llt_;
};

class BlockJacobiPreconditioner final : public Preconditioner {
 public:
  BlockJacobiPreconditioner(const SparseMatrix& A, int n_blocks) {
    const int n = A.n;
    if (n_blocks < 1 || n_blocks > n) throw Error("not-spd");
    const int base = n / n_blocks, extra = n % n_blocks;
    int at = 0;
    for (int b = 0; b < n_blocks; ++b) {
      const int size = base + (b < extra ? 1 : 0);
      offsets_.push_back(at);
      std::vector<Eigen::Triplet<double>> trip;
      for (int i = at; i < at + size; ++i) {
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
          const int j = A.col_idx[k];
          if (j >= at && j < at + size) {
            trip.emplace_back(i - at, j - at, A.vals[k]);
          }
        }
      }
      SpMat block(size, size);
      block.setFromTriplets(trip.begin(), trip.end());
      factors_.emplace_back(std::make_unique<Eigen::SimplicialLLT<SpMat>>());
      factors_.back()->compute(block);
      if (factors_.back()->info() != Eigen::Success) throw Error("not-spd");
      at += size;
    }
    offsets_.push_back(n);
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    for (size_t b = 0; b < factors_.size(); ++b) {
      const int at = offsets_[b], size = offsets_[b + 1] - at;
      Eigen::Map<const Eigen::VectorXd> rb(r.data() + at, size);
      Eigen::Map<Eigen::VectorXd> zb(z.data() + at, size);
      zb = factors_[b]->solve(rb);
    }
  }
  const char* kind() const override { return "block-jacobi"; }

 private:
  std::vector<int> offsets_;
  std::vector<std::unique_ptr<Eigen::SimplicialLLT<SpMat>>> factors_;
};

}  // namespace

std::unique_ptr<Preconditioner> build_identity(int) {
  return std::make_unique<IdentityPreconditioner>();
}

std::unique_ptr<Preconditioner> build_cholesky(const SparseMatrix& A) {
  return std::make_unique<CholeskyPreconditioner>(A);
}

std::unique_ptr<Preconditioner> build_block_jacobi(const SparseMatrix& A,
                                                   int n_blocks) {
  return std::make_unique<BlockJacobiPreconditioner>(A, n_blocks);
}

int default_block_count(int n) { return std::max(4, n / 500); }

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

PcgResult pcg(const LinearSystem& system, const Preconditioner& M, double eps,
              int max_iter, PcgTrace* trace) {
  const SparseMatrix& A = system.A;
  const int n = A.n;
  if (!(eps > 0.0) || eps >= 1.0) throw Error("invalid-tolerance");
  if (max_iter < 0) max_iter = 10 * n;
  if (trace) trace->relative_residuals.clear();

  PcgResult result;
  result.x.assign(n, 0.0);
  const double norm_b = norm2(system.b);
  if (norm_b == 0.0) {
    result.record = {0, 0.0, true, M.built_from};
    return result;
  }

  std::vector<double> r = system.b;  // residual of the zero start
  std::vector<double> z(n), p(n), Ap(n), r_true(n);
  M.apply(r, z);
  std::copy(z.begin(), z.end(), p.begin());
  double rz = dot(r, z);
  if (!(rz > 0.0)) throw Error("pcg-breakdown");

  SolveRecord record;
  record.preconditioner_index = M.built_from;
  for (int j = 1; j <= max_iter; ++j) {
    A.matvec(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw Error("pcg-breakdown");
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      result.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }

    // normwise backward error on the recomputed true residual
    A.matvec(result.x, r_true);
    for (int i = 0; i < n; ++i) r_true[i] = system.b[i] - r_true[i];
    const double rel = norm2(r_true) / norm_b;
    if (trace) {
      trace->relative_residuals.push_back(rel);
      if (trace->capture_iterates) trace->iterates.push_back(result.x);
    }
    record.iterations = j;
    record.final_relative_residual = rel;
    if (rel < eps) {
      record.converged = true;
      break;
    }

    M.apply(r, z);
    const double rz_next = dot(r, z);
    if (!(rz_next > 0.0)) throw Error("pcg-breakdown");
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  result.record = record;
  return result;
}

}  // namespace vqp
