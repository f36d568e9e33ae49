#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vqp/field.hpp"

namespace vqp {

double normal_cdf(double x);       // F
double normal_quantile(double p);  // F^{-1}, p in (0,1)

enum class MapKind { Scale, ScaledCdf };
enum class QuantMethod { KMeans, Clvq, Grid };

const char* to_string(MapKind kind);
const char* to_string(QuantMethod method);
MapKind map_kind_from_string(const std::string& s);
QuantMethod method_from_string(const std::string& s);

// Invertible link between latent coordinates chi and the space the quantizer
// lives in:
//   Scale      eta = Lambda^{1/2} chi
//   ScaledCdf  eta = Lambda^{1/2} F(chi), image inside prod (0, sqrt(lambda_k))
struct T2Map {
  MapKind kind = MapKind::Scale;
  std::vector<double> lambdas;

  int m() const { return static_cast<int>(lambdas.size()); }
  void to_quant(std::span<const double> chi, std::span<double> eta) const;
  void to_latent(std::span<const double> eta, std::span<double> chi) const;
  std::vector<double> to_quant(std::span<const double> chi) const;
  std::vector<double> to_latent(std::span<const double> eta) const;
};

// Divergence hook of the distortion machinery. Squared Euclidean distance is
// the only instance in use.
struct SquaredEuclidean {
  double operator()(std::span<const double> x, std::span<const double> y) const {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
    return s;
  }
};

// Flat row-major sample container for latent vectors.
struct SampleSet {
  int n = 0, m = 0;
  std::vector<double> data;

  std::span<const double> row(int i) const {
    return {data.data() + static_cast<size_t>(i) * m, static_cast<size_t>(m)};
  }
  std::span<double> row(int i) {
    return {data.data() + static_cast<size_t>(i) * m, static_cast<size_t>(m)};
  }
};

// n x m iid standard normal draws from the counter stream of `seed`.
SampleSet draw_standard_normal(int n, int m, std::uint64_t seed);

// Codebook of P centroids stored in quantization (T2^{-1}) space. Grid
// codebooks additionally carry their latent-space sites, where their nearest
// -site rule is evaluated.
struct Codebook {
  int m = 0, P = 0;
  T2Map t2;
  QuantMethod method = QuantMethod::KMeans;
  std::vector<double> centroids;        // P x m, quantization space
  std::vector<double> latent_centroids; // P x m, grids only
  double grid_s = 0.0;                  // grid half-spacing, grids only
  std::uint64_t seed = 0;               // seed the codebook was trained with

  std::span<const double> centroid(int p) const {
    return {centroids.data() + static_cast<size_t>(p) * m, static_cast<size_t>(m)};
  }
  std::span<const double> latent_centroid(int p) const {
    return {latent_centroids.data() + static_cast<size_t>(p) * m,
            static_cast<size_t>(m)};
  }
  double centroid_norm(int p) const;
  void validate() const;  // throws "invalid-codebook" on duplicates etc.
};

// Nearest-centroid cell of a latent vector; ties break to the smallest index.
// KMeans/Clvq codebooks measure distance in quantization space, Grid
// codebooks in latent space. Throws "invalid-latent" on non-finite input.
int assign(const Codebook& codebook, std::span<const double> xi);

struct DistortionReport {
  double total = 0.0;
  std::vector<double> per_cell;
  std::vector<double> frequencies;
  long n_s = 0;
};

// Empirical distortion of a sample under the codebook; distances in
// quantization space. Throws "empty-sample" for an empty set.
DistortionReport empirical_distortion(const Codebook& codebook,
                                      const SampleSet& samples);

// Lloyd iterations on the mapped sample, seeded by farthest-point
// ("minmax") initialization. Stops when the relative distortion decrease
// drops below rel_tol or after max_iter rounds. Empty cells are repaired by
// moving the unused centroid onto the worst-represented sample point.
// `history`, when given, receives the per-iteration distortion.
Codebook kmeans(const SampleSet& samples, const T2Map& t2, int P,
                std::uint64_t init_seed, int max_iter = 200,
                double rel_tol = 1e-6, std::vector<double>* history = nullptr);

// Lloyd iterations from a caller-supplied codebook (same stopping and repair
// rules as kmeans).
Codebook kmeans_refine(const SampleSet& samples, const T2Map& t2,
                       std::vector<double> initial_centroids, int max_iter = 200,
                       double rel_tol = 1e-6,
                       std::vector<double>* history = nullptr);

// Competitive learning: one or more passes over the mapped stream, moving the
// nearest centroid toward each point by gamma_t = gamma0 * a / (a + t).
// schedule_a <= 0 selects the default a = n_s / 10. Throws
// "invalid-learning-rate" unless every gamma_t lies in (0, 1].
Codebook clvq(const SampleSet& samples, const T2Map& t2, int P,
              std::uint64_t init_seed, double gamma0 = 0.5,
              double schedule_a = -1.0, int passes = 1);

// Deterministic codebook: the origin plus the 2^m vertices of the hypercube
// with half-side s = 2 F^{-1}(2/3) in latent space, all mapped through
// T2^{-1}. P = 1 + 2^m for m >= 1, P = 1 for m = 0.
Codebook grid_codebook(const T2Map& t2, int m);
double grid_parameter();  // s

// Latent sites of the grid codebook in construction order.
std::vector<double> grid_latent_sites(int m, double s);

// kappa_p = transport(lift(T2(centroid_p))): the coefficient field a
// preconditioner is assembled from.
std::vector<double> centroid_coefficient(const Codebook& codebook, int p,
                                         const KLBasis& basis);

}  // namespace vqp
