#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vqp/fem.hpp"

namespace vqp {

// Squared exponential covariance C(x,x') = sigma2 * exp(-|x-x'|^2 / ell^2).
struct CovarianceKernel {
  double sigma2 = 1.0;
  double ell = 0.1;

  CovarianceKernel(double sigma2_, double ell_);
  double operator()(double xa, double ya, double xb, double yb) const;
};

// Dominant eigenpairs of the covariance operator, discretized with a lumped
// mass Galerkin scheme on the mesh the basis was built from. Eigenvectors are
// nodal and orthonormal in the mass inner product <u, v> = u^T M v.
struct KLBasis {
  std::vector<double> eigenvalues;   // nonincreasing, length n_kl
  std::vector<double> eigenvectors;  // n_kl x n_nodes, mode-major
  std::vector<double> mass;          // lumped mass diagonal, length n_nodes
  double total_variance = 0.0;       // sigma2 * |Omega|
  double sigma2 = 0.0, ell = 0.0;    // kernel used to build
  int mesh_resolution = 0;
  std::uint64_t mesh_hash = 0;

  int n_kl() const { return static_cast<int>(eigenvalues.size()); }
  int n_nodes() const { return static_cast<int>(mass.size()); }
  std::span<const double> mode(int k) const {
    return {eigenvectors.data() + static_cast<size_t>(k) * n_nodes(),
            static_cast<size_t>(n_nodes())};
  }
};

// One draw of the latent vector together with its nodal log-field.
struct FieldRealization {
  std::vector<double> xi;
  std::vector<double> nodal_log_values;
  std::uint64_t seed_index = 0;
};

// Solves the discrete covariance eigenproblem and keeps the n_kl dominant
// modes. Modes below 1e-12 of the leading eigenvalue are dropped as
// degenerate, so the returned basis may hold fewer than n_kl modes.
// Throws "rank-exceeds-dofs" if n_kl exceeds the node count and
// "kl-eigensolve-failed" if the decomposition does not converge.
KLBasis build_kl_basis(const CovarianceKernel& kernel, const TriMesh& mesh,
                       int n_kl);

// total_variance minus the energy of the first m modes.
double truncation_error(const KLBasis& basis, int m);

// Fraction of total variance captured by the first m modes.
double relative_energy(const KLBasis& basis, int m);

// xi_k = lambda_k^{-1/2} <Phi_k, h>; throws "degenerate-mode" if a requested
// mode has (numerically) zero eigenvalue.
std::vector<double> project(const KLBasis& basis, int m,
                            std::span<const double> nodal_values);

// sum_k lambda_k^{1/2} xi_k Phi_k as nodal values.
std::vector<double> lift(const KLBasis& basis, std::span<const double> xi);

// Deterministic iid N(0, I_m) draw addressed by (seed, index); the latent
// vector is lifted and stored alongside.
FieldRealization sample_realization(const KLBasis& basis, int m,
                                    std::uint64_t seed, std::uint64_t index);

// Componentwise exp; throws "coefficient-overflow" if any output is not
// finite.
std::vector<double> transport(std::span<const double> nodal_log_values);

// h^T M h, the squared mesh L2 norm of a nodal field.
double omega_norm_sq(const KLBasis& basis, std::span<const double> nodal);

}  // namespace vqp
