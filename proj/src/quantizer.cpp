#include "vqp/quantizer.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vqp/error.hpp"
#include "vqp/rng.hpp"

namespace vqp {

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> unit_normal;
  if (!(p > 0.0 && p < 1.0)) throw Error("invalid-latent");
  return boost::math::quantile(unit_normal, p);
}

const char* to_string(MapKind kind) {
  return kind == MapKind::Scale ? "scale" : "cdf";
}

const char* to_string(QuantMethod method) {
  switch (method) {
    case QuantMethod::KMeans: return "kmeans";
    case QuantMethod::Clvq: return "clvq";
    default: return "grid";
  }
}

MapKind map_kind_from_string(const std::string& s) {
  if (s == "scale") return MapKind::Scale;
  if (s == "cdf") return MapKind::ScaledCdf;
  throw Error("invalid-map-kind");
}

QuantMethod method_from_string(const std::string& s) {
  if (s == "kmeans") return QuantMethod::KMeans;
  if (s == "clvq") return QuantMethod::Clvq;
  if (s == "grid") return QuantMethod::Grid;
  throw Error("invalid-method");
}

void T2Map::to_quant(std::span<const double> chi, std::span<double> eta) const {
  for (int k = 0; k < m(); ++k) {
    const double root = std::sqrt(lambdas[k]);
    eta[k] = kind == MapKind::Scale ? root * chi[k] : root * normal_cdf(chi[k]);
  }
}

void T2Map::to_latent(std::span<const double> eta, std::span<double> chi) const {
  for (int k = 0; k < m(); ++k) {
    const double root = std::sqrt(lambdas[k]);
    chi[k] = kind == MapKind::Scale ? eta[k] / root
                                    : normal_quantile(eta[k] / root);
  }
}

std::vector<double> T2Map::to_quant(std::span<const double> chi) const {
  std::vector<double> eta(m());
  to_quant(chi, eta);
  return eta;
}

std::vector<double> T2Map::to_latent(std::span<const double> eta) const {
  std::vector<double> chi(m());
  to_latent(eta, chi);
  return chi;
}

SampleSet draw_standard_normal(int n, int m, std::uint64_t seed) {
  SampleSet s;
  s.n = n;
  s.m = m;
  s.data.resize(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    auto row = s.row(i);
    for (int k = 0; k < m; ++k) row[k] = gaussian_draw(seed, i, k);
  }
  return s;
}

double Codebook::centroid_norm(int p) const {
  double s = 0.0;
  for (double v : centroid(p)) s += v * v;
  return std::sqrt(s);
}

void Codebook::validate() const {
  if (P < 1 || m < 0 || static_cast<int>(centroids.size()) != P * m)
    throw Error("invalid-codebook");
  if (t2.m() != m) throw Error("invalid-codebook");
  SquaredEuclidean d2;
  for (int p = 0; p < P; ++p) {
    for (int q = p + 1; q < P; ++q) {
      if (d2(centroid(p), centroid(q)) == 0.0) throw Error("invalid-codebook");
    }
  }
  if (method == QuantMethod::Grid) {
    const int expected = m == 0 ? 1 : 1 + (1 << m);
    if (P != expected) throw Error("invalid-codebook");
  }
}

namespace {

int nearest_row(std::span<const double> x, const std::vector<double>& sites,
                int P, int m) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int p = 0; p < P; ++p) {
    const double* c = sites.data() + static_cast<size_t>(p) * m;
    double d = 0.0;
    for (int k = 0; k < m; ++k) {
      const double t = x[k] - c[k];
      d += t * t;
    }
    if (d < best_d) {  // strict: ties keep the smallest index
      best_d = d;
      best = p;
    }
  }
  return best;
}

}  // namespace

int assign(const Codebook& codebook, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != codebook.m) throw Error("invalid-latent");
  for (double v : xi) {
    if (!std::isfinite(v)) throw Error("invalid-latent");
  }
  if (codebook.method == QuantMethod::Grid) {
    return nearest_row(xi, codebook.latent_centroids, codebook.P, codebook.m);
  }
  std::vector<double> eta(codebook.m);
  codebook.t2.to_quant(xi, eta);
  return nearest_row(eta, codebook.centroids, codebook.P, codebook.m);
}

DistortionReport empirical_distortion(const Codebook& codebook,
                                      const SampleSet& samples) {
  if (samples.n < 1) throw Error("empty-sample");
  if (samples.m != codebook.m) throw Error("invalid-latent");
  SquaredEuclidean d2;
  std::vector<double> cell_sum(codebook.P, 0.0);
  std::vector<long> counts(codebook.P, 0);
  std::vector<double> eta(codebook.m);
  for (int i = 0; i < samples.n; ++i) {
    const auto xi = samples.row(i);
    const int p = assign(codebook, xi);
    codebook.t2.to_quant(xi, eta);
    cell_sum[p] += d2(eta, codebook.centroid(p));
    counts[p] += 1;
  }
  DistortionReport report;
  report.n_s = samples.n;
  report.per_cell.resize(codebook.P);
  report.frequencies.resize(codebook.P);
  double total = 0.0;
  for (int p = 0; p < codebook.P; ++p) {
    total += cell_sum[p];
    report.per_cell[p] = counts[p] > 0 ? cell_sum[p] / counts[p] : 0.0;
    report.frequencies[p] = static_cast<double>(counts[p]) / samples.n;
  }
  report.total = total / samples.n;
  return report;
}

namespace {

// Farthest-point traversal: start from a seeded random sample, then keep
// picking the point with the largest minimum distance to the chosen set.
// Throws "insufficient-samples" when fewer than P distinct points exist.
std::vector<double> minmax_seed(const std::vector<double>& pts, int n, int m,
                                int P, std::uint64_t init_seed) {
  std::vector<double> centroids(static_cast<size_t>(P) * m);
  const int first = static_cast<int>(counter_hash(init_seed, 0, 0) % n);
  std::copy_n(pts.data() + static_cast<size_t>(first) * m, m, centroids.data());
  std::vector<double> min_d(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int k = 0; k < m; ++k) {
      const double t = pts[static_cast<size_t>(i) * m + k] - centroids[k];
      d += t * t;
    }
    min_d[i] = d;
  }
  for (int p = 1; p < P; ++p) {
    int far = 0;
    for (int i = 1; i < n; ++i) {
      if (min_d[i] > min_d[far]) far = i;
    }
    if (!(min_d[far] > 0.0)) throw Error("insufficient-samples");
    double* c = centroids.data() + static_cast<size_t>(p) * m;
    std::copy_n(pts.data() + static_cast<size_t>(far) * m, m, c);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      for (int k = 0; k < m; ++k) {
        const double t = pts[static_cast<size_t>(i) * m + k] - c[k];
        d += t * t;
      }
      min_d[i] = std::min(min_d[i], d);
    }
  }
  return centroids;
}

struct LloydState {
  std::vector<double> mapped;  // n x m quantization-space points
  int n = 0, m = 0;
};

LloydState map_samples(const SampleSet& samples, const T2Map& t2) {
  LloydState st;
  st.n = samples.n;
  st.m = samples.m;
  st.mapped.resize(static_cast<size_t>(st.n) * st.m);
  for (int i = 0; i < st.n; ++i) {
    t2.to_quant(samples.row(i),
                {st.mapped.data() + static_cast<size_t>(i) * st.m,
                 static_cast<size_t>(st.m)});
  }
  return st;
}

double assign_all(const LloydState& st, const std::vector<double>& centroids,
                  int P, std::vector<int>& labels) {
  double total = 0.0;
  for (int i = 0; i < st.n; ++i) {
    const double* x = st.mapped.data() + static_cast<size_t>(i) * st.m;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int p = 0; p < P; ++p) {
      const double* c = centroids.data() + static_cast<size_t>(p) * st.m;
      double d = 0.0;
      for (int k = 0; k < st.m; ++k) {
        const double t = x[k] - c[k];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    labels[i] = best;
    total += best_d;
  }
  return total / st.n;
}

// Moves every empty centroid onto the sample point farthest from its own
// centroid, then recomputes the Voronoi labels. Never drops a cell.
bool repair_empty_cells(const LloydState& st, std::vector<double>& centroids,
                        int P, std::vector<int>& labels) {
  bool repaired = false;
  for (;;) {
    std::vector<long> counts(P, 0);
    for (int i = 0; i < st.n; ++i) counts[labels[i]] += 1;
    int empty = -1;
    for (int p = 0; p < P; ++p) {
      if (counts[p] == 0) {
        empty = p;
        break;
      }
    }
    if (empty < 0) return repaired;
    repaired = true;
    int worst = 0;
    double worst_d = -1.0;
    for (int i = 0; i < st.n; ++i) {
      const double* x = st.mapped.data() + static_cast<size_t>(i) * st.m;
      const double* c = centroids.data() + static_cast<size_t>(labels[i]) * st.m;
      double d = 0.0;
      for (int k = 0; k < st.m; ++k) {
        const double t = x[k] - c[k];
        d += t * t;
      }
      if (d > worst_d) {
        worst_d = d;
        worst = i;
      }
    }
    std::copy_n(st.mapped.data() + static_cast<size_t>(worst) * st.m, st.m,
                centroids.data() + static_cast<size_t>(empty) * st.m);
    assign_all(st, centroids, P, labels);
  }
}

Codebook lloyd(const SampleSet& samples, const T2Map& t2,
               std::vector<double> centroids, int P, std::uint64_t seed,
               int max_iter, double rel_tol, std::vector<double>* history) {
  const LloydState st = map_samples(samples, t2);
  std::vector<int> labels(st.n);
  if (history) history->clear();

  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    double w = assign_all(st, centroids, P, labels);
    if (repair_empty_cells(st, centroids, P, labels)) {
      w = assign_all(st, centroids, P, labels);
    }
    if (history) history->push_back(w);

    // conditional means
    std::vector<double> sums(static_cast<size_t>(P) * st.m, 0.0);
    std::vector<long> counts(P, 0);
    for (int i = 0; i < st.n; ++i) {
      const double* x = st.mapped.data() + static_cast<size_t>(i) * st.m;
      double* s = sums.data() + static_cast<size_t>(labels[i]) * st.m;
      for (int k = 0; k < st.m; ++k) s[k] += x[k];
      counts[labels[i]] += 1;
    }
    for (int p = 0; p < P; ++p) {
      if (counts[p] == 0) continue;  // handled next round
      double* c = centroids.data() + static_cast<size_t>(p) * st.m;
      for (int k = 0; k < st.m; ++k)
        c[k] = sums[static_cast<size_t>(p) * st.m + k] / counts[p];
    }

    if (prev < std::numeric_limits<double>::infinity() &&
        prev - w <= rel_tol * std::abs(prev)) {
      break;
    }
    prev = w;
  }

  Codebook codebook;
  codebook.m = st.m;
  codebook.P = P;
  codebook.t2 = t2;
  codebook.method = QuantMethod::KMeans;
  codebook.centroids = std::move(centroids);
  codebook.seed = seed;
  codebook.validate();
  return codebook;
}

}  // namespace

Codebook kmeans(const SampleSet& samples, const T2Map& t2, int P,
                std::uint64_t init_seed, int max_iter, double rel_tol,
                std::vector<double>* history) {
  if (P < 1) throw Error("invalid-codebook");
  if (samples.n < P) throw Error("insufficient-samples");
  const LloydState st = map_samples(samples, t2);
  std::vector<double> centroids =
      minmax_seed(st.mapped, st.n, st.m, P, init_seed);
  return lloyd(samples, t2, std::move(centroids), P, init_seed, max_iter,
               rel_tol, history);
}

Codebook kmeans_refine(const SampleSet& samples, const T2Map& t2,
                       std::vector<double> initial_centroids, int max_iter,
                       double rel_tol, std::vector<double>* history) {
  const int m = t2.m();
  if (m == 0 || initial_centroids.size() % m != 0)
    throw Error("invalid-codebook");
  const int P = static_cast<int>(initial_centroids.size()) / m;
  if (samples.n < P) throw Error("insufficient-samples");
  return lloyd(samples, t2, std::move(initial_centroids), P, 0, max_iter,
               rel_tol, history);
}

Codebook clvq(const SampleSet& samples, const T2Map& t2, int P,
              std::uint64_t init_seed, double gamma0, double schedule_a,
              int passes) {
  if (P < 1) throw Error("invalid-codebook");
  if (samples.n < P) throw Error("insufficient-samples");
  if (!(gamma0 > 0.0) || gamma0 > 1.0) throw Error("invalid-learning-rate");
  if (schedule_a <= 0.0) schedule_a = samples.n / 10.0;
  if (passes < 1) throw Error("invalid-learning-rate");

  const LloydState st = map_samples(samples, t2);
  std::vector<double> centroids =
      minmax_seed(st.mapped, st.n, st.m, P, init_seed);

  long t = 0;
  for (int pass = 0; pass < passes; ++pass) {
    for (int i = 0; i < st.n; ++i, ++t) {
      const double* x = st.mapped.data() + static_cast<size_t>(i) * st.m;
      // competitive phase
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int p = 0; p < P; ++p) {
        const double* c = centroids.data() + static_cast<size_t>(p) * st.m;
        double d = 0.0;
        for (int k = 0; k < st.m; ++k) {
          const double u = x[k] - c[k];
          d += u * u;
        }
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      // learning phase: homothety toward the sample
      const double gamma = gamma0 * schedule_a / (schedule_a + t);
      if (!(gamma > 0.0) || gamma > 1.0) throw Error("invalid-learning-rate");
      double* c = centroids.data() + static_cast<size_t>(best) * st.m;
      for (int k = 0; k < st.m; ++k) c[k] -= gamma * (c[k] - x[k]);
    }
  }
  for (double v : centroids) {
    if (!std::isfinite(v)) throw Error("invalid-codebook");
  }

  Codebook codebook;
  codebook.m = st.m;
  codebook.P = P;
  codebook.t2 = t2;
  codebook.method = QuantMethod::Clvq;
  codebook.centroids = std::move(centroids);
  codebook.seed = init_seed;
  codebook.validate();
  return codebook;
}

double grid_parameter() { return 2.0 * normal_quantile(2.0 / 3.0); }

std::vector<double> grid_latent_sites(int m, double s) {
  if (m == 0) return {};
  const int P = 1 + (1 << m);
  std::vector<double> sites(static_cast<size_t>(P) * m, 0.0);
  // site 0 is the origin; vertex v of the hypercube maps component k to
  // -s or +s from bit k of (v - 1)
  for (int v = 1; v < P; ++v) {
    const unsigned bits = static_cast<unsigned>(v - 1);
    for (int k = 0; k < m; ++k) {
      sites[static_cast<size_t>(v) * m + k] = (bits >> k) & 1u ? s : -s;
    }
  }
  return sites;
}

Codebook grid_codebook(const T2Map& t2, int m) {
  if (m < 0 || m > 16 || t2.m() != m) throw Error("mode-count-out-of-range");
  Codebook codebook;
  codebook.m = m;
  codebook.P = m == 0 ? 1 : 1 + (1 << m);
  codebook.t2 = t2;
  codebook.method = QuantMethod::Grid;
  codebook.grid_s = grid_parameter();
  codebook.latent_centroids = grid_latent_sites(m, codebook.grid_s);
  if (m == 0) {
    codebook.validate();
    return codebook;
  }
  codebook.centroids.resize(static_cast<size_t>(codebook.P) * m);
  for (int p = 0; p < codebook.P; ++p) {
    t2.to_quant(codebook.latent_centroid(p),
                {codebook.centroids.data() + static_cast<size_t>(p) * m,
                 static_cast<size_t>(m)});
  }
  codebook.validate();
  return codebook;
}

std::vector<double> centroid_coefficient(const Codebook& codebook, int p,
                                         const KLBasis& basis) {
  if (p < 0 || p >= codebook.P) throw Error("invalid-codebook");
  std::vector<double> chi(codebook.m);
  if (codebook.method == QuantMethod::Grid) {
    const auto site = codebook.latent_centroid(p);
    std::copy(site.begin(), site.end(), chi.begin());
  } else {
    codebook.t2.to_latent(codebook.centroid(p), chi);
  }
  return transport(lift(basis, chi));
}

}  // namespace vqp
