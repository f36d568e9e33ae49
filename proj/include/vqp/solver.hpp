#pragma once

#include <memory>
#include <span>
#include <vector>

#include "vqp/fem.hpp"

namespace vqp {

// Application of M^{-1}. Implementations are immutable after construction,
// linear and SPD as operators, and safe to apply from several threads.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
  virtual const char* kind() const = 0;

  int built_from = -1;  // centroid index, -1 when not centroid-derived
};

std::unique_ptr<Preconditioner> build_identity(int n);

// Sparse Cholesky under a reverse Cuthill-McKee permutation; apply performs
// the two triangular solves. Throws "not-spd" when the factorization fails.
std::unique_ptr<Preconditioner> build_cholesky(const SparseMatrix& A);

// Contiguous near-equal row blocks, each factored independently.
std::unique_ptr<Preconditioner> build_block_jacobi(const SparseMatrix& A,
                                                   int n_blocks);

// One diagonal block per ~500 rows, at least 4 blocks.
int default_block_count(int n);

struct AmgOptions {
  double strength_threshold = 0.08;  // |a_ij| >= theta sqrt(a_ii a_jj)
  double jacobi_weight = 2.0 / 3.0;
  double prolongator_damping = 4.0 / 3.0;  // divided by the estimated rho(D^{-1}A)
  int power_iterations = 10;
  int coarse_size = 64;
  int max_levels = 32;
  std::vector<int>* level_sizes_out = nullptr;  // filled at build time if set
};

// Smoothed-aggregation hierarchy applied as a single symmetric V-cycle with
// one weighted-Jacobi sweep on each side. A level that fails to coarsen
// truncates the hierarchy; with max_levels = 1 the cycle degenerates to the
// smoother alone.
std::unique_ptr<Preconditioner> build_amg(const SparseMatrix& A,
                                          const AmgOptions& options = {});

struct SolveRecord {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  int preconditioner_index = -1;
};

struct PcgTrace {
  std::vector<double> relative_residuals;  // true residual, per iteration
  bool capture_iterates = false;
  std::vector<std::vector<double>> iterates;
};

struct PcgResult {
  std::vector<double> x;
  SolveRecord record;
};

// Preconditioned conjugate gradient from the zero start. The convergence test
// recomputes the true residual b - A x every iteration, so the iteration
// count is comparable across preconditioners. max_iter < 0 selects 10 n.
// Hitting max_iter yields converged = false; an indefinite direction throws
// "pcg-breakdown".
PcgResult pcg(const LinearSystem& system, const Preconditioner& M,
              double eps = 1e-6, int max_iter = -1, PcgTrace* trace = nullptr);

}  // namespace vqp
