#include "vqp/field.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "vqp/error.hpp"
#include "vqp/rng.hpp"

namespace vqp {

CovarianceKernel::CovarianceKernel(double sigma2_, double ell_)
    : sigma2(sigma2_), ell(ell_) {
  if (!(sigma2 > 0.0) || !(ell > 0.0)) throw Error("invalid-kernel");
}

double CovarianceKernel::operator()(double xa, double ya, double xb,
                                    double yb) const {
  const double dx = xa - xb, dy = ya - yb;
  return sigma2 * std::exp(-(dx * dx + dy * dy) / (ell * ell));
}

KLBasis build_kl_basis(const CovarianceKernel& kernel, const TriMesh& mesh,
                       int n_kl) {
  const int nn = mesh.n_nodes();
  if (n_kl < 1 || n_kl > nn) throw Error("rank-exceeds-dofs");

  const std::vector<double> mass = lumped_mass(mesh);
  std::vector<double> sqrt_mass(nn);
  for (int i = 0; i < nn; ++i) sqrt_mass[i] = std::sqrt(mass[i]);

  // Symmetrized lumped Galerkin operator W = M^{1/2} C M^{1/2}; eigenvectors
  // v are plainly orthonormal, so Phi = M^{-1/2} v is M-orthonormal.
  Eigen::MatrixXd W(nn, nn);
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double cij =
          kernel(mesh.xs[i], mesh.ys[i], mesh.xs[j], mesh.ys[j]);
      W(i, j) = W(j, i) = sqrt_mass[i] * cij * sqrt_mass[j];
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  if (es.info() != Eigen::Success) throw Error("kl-eigensolve-failed");

  // Eigen sorts ascending; keep the dominant modes above the degeneracy
  // cutoff relative to the leading eigenvalue.
  const auto& evals = es.eigenvalues();
  const auto& evecs = es.eigenvectors();
  const double lead = evals(nn - 1);
  if (!(lead > 0.0)) throw Error("kl-eigensolve-failed");
  const double cutoff = 1e-12 * lead;

  int kept = 0;
  while (kept < n_kl && evals(nn - 1 - kept) >= cutoff) ++kept;

  KLBasis basis;
  basis.sigma2 = kernel.sigma2;
  basis.ell = kernel.ell;
  basis.mesh_resolution = mesh.resolution;
  basis.mesh_hash = mesh_fingerprint(mesh);
  basis.mass = mass;
  double area = 0.0;
  for (double m : mass) area += m;
  basis.total_variance = kernel.sigma2 * area;
  basis.eigenvalues.resize(kept);
  basis.eigenvectors.resize(static_cast<size_t>(kept) * nn);
  for (int k = 0; k < kept; ++k) {
    const int col = nn - 1 - k;
    basis.eigenvalues[k] = evals(col);
    double* phi = basis.eigenvectors.data() + static_cast<size_t>(k) * nn;
    for (int i = 0; i < nn; ++i) phi[i] = evecs(i, col) / sqrt_mass[i];
    // sign convention: first entry of largest magnitude made positive
    int imax = 0;
    for (int i = 1; i < nn; ++i) {
      if (std::abs(phi[i]) > std::abs(phi[imax])) imax = i;
    }
    if (phi[imax] < 0.0) {
      for (int i = 0; i < nn; ++i) phi[i] = -phi[i];
    }
  }
  return basis;
}

double truncation_error(const KLBasis& basis, int m) {
  if (m < 0 || m > basis.n_kl()) throw Error("mode-count-out-of-range");
  double energy = 0.0;
  for (int k = 0; k < m; ++k) energy += basis.eigenvalues[k];
  return basis.total_variance - energy;
}

double relative_energy(const KLBasis& basis, int m) {
  return 1.0 - truncation_error(basis, m) / basis.total_variance;
}

std::vector<double> project(const KLBasis& basis, int m,
                            std::span<const double> nodal_values) {
  if (m < 0 || m > basis.n_kl()) throw Error("mode-count-out-of-range");
  if (static_cast<int>(nodal_values.size()) != basis.n_nodes())
    throw Error("invalid-latent");
  const int nn = basis.n_nodes();
  std::vector<double> xi(m);
  for (int k = 0; k < m; ++k) {
    const double lambda = basis.eigenvalues[k];
    if (!(lambda > 1e-12 * basis.eigenvalues[0])) throw Error("degenerate-mode");
    const auto phi = basis.mode(k);
    double inner = 0.0;
    for (int i = 0; i < nn; ++i) inner += phi[i] * basis.mass[i] * nodal_values[i];
    xi[k] = inner / std::sqrt(lambda);
  }
  return xi;
}

std::vector<double> lift(const KLBasis& basis, std::span<const double> xi) {
  const int m = static_cast<int>(xi.size());
  if (m > basis.n_kl()) throw Error("mode-count-out-of-range");
  const int nn = basis.n_nodes();
  std::vector<double> h(nn, 0.0);
  for (int k = 0; k < m; ++k) {
    const double w = std::sqrt(basis.eigenvalues[k]) * xi[k];
    if (w == 0.0) continue;
    const auto phi = basis.mode(k);
    for (int i = 0; i < nn; ++i) h[i] += w * phi[i];
  }
  return h;
}

FieldRealization sample_realization(const KLBasis& basis, int m,
                                    std::uint64_t seed, std::uint64_t index) {
  if (m < 0 || m > basis.n_kl()) throw Error("mode-count-out-of-range");
  FieldRealization real;
  real.seed_index = index;
  real.xi.resize(m);
  for (int k = 0; k < m; ++k) real.xi[k] = gaussian_draw(seed, index, k);
  real.nodal_log_values = lift(basis, real.xi);
  return real;
}

std::vector<double> transport(std::span<const double> nodal_log_values) {
  std::vector<double> kappa(nodal_log_values.size());
  for (size_t i = 0; i < kappa.size(); ++i) {
    kappa[i] = std::exp(nodal_log_values[i]);
    if (!std::isfinite(kappa[i])) throw Error("coefficient-overflow");
  }
  return kappa;
}

double omega_norm_sq(const KLBasis& basis, std::span<const double> nodal) {
  double s = 0.0;
  for (int i = 0; i < basis.n_nodes(); ++i) s += nodal[i] * basis.mass[i] * nodal[i];
  return s;
}

}  // namespace vqp
