#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vqp/quantizer.hpp"
#include "vqp/solver.hpp"

namespace vqp {

enum class PrecondKind { Identity, Cholesky, BlockJacobi, Amg };
const char* to_string(PrecondKind kind);
PrecondKind precond_from_string(const std::string& s);

struct QuantizerSpec {
  QuantMethod method = QuantMethod::KMeans;
  int P = 10;
  MapKind map = MapKind::Scale;
  int n_s = 100000;           // training sample size
  std::uint64_t seed = 1;     // training sample stream
  std::uint64_t init_seed = 1;
  double gamma0 = 0.5;        // clvq schedule
  double schedule_a = -1.0;   // <= 0 selects n_s / 10
  int passes = 1;
};

struct CampaignConfig {
  int mesh_resolution = 32;
  double sigma2 = 1.0;
  double ell = 0.1;
  int n_kl = 64;
  int m = 8;
  QuantizerSpec quantizer;
  PrecondKind precond = PrecondKind::Amg;
  double eps = 1e-6;
  int n_realizations = 100;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  int threads = 1;
  // Optional artifacts; when set they are loaded instead of rebuilt and a
  // missing file raises "artifact-not-found".
  std::string mesh_file;
  std::string basis_file;
  std::string codebook_file;

  void validate() const;
};

CampaignConfig config_from_json(const std::string& text);
CampaignConfig config_from_json_file(const std::string& path);

// Scientific configuration only: excludes output_dir and threads, which must
// not influence results.
std::string config_to_json(const CampaignConfig& config);

struct CentroidStats {
  long n_p = 0;
  long sum_j = 0;        // all solves attributed to the cell
  double mean_j = 0.0;   // converged solves only
  double centroid_norm = 0.0;
};

struct SimulationReport {
  long n_realizations = 0;
  std::vector<CentroidStats> per_centroid;
  std::vector<int> assignments;      // per realization
  std::vector<SolveRecord> records;  // per realization
  double mean_j = 0.0;               // converged solves only
  long total_iterations = 0;
  long max_sum_j = 0;
  long min_sum_j = 0;
  long unconverged = 0;
};

struct CampaignArtifacts {
  TriMesh mesh;
  KLBasis basis;
  Codebook codebook;
};

// Builds (or loads) mesh, KL basis and codebook as the config directs.
CampaignArtifacts prepare_campaign(const CampaignConfig& config);

// n_realizations x n_kl latent draws from the master seed.
SampleSet draw_realizations(const CampaignConfig& config, int n_kl);

// Assigns every realization to its nearest centroid, builds the P
// preconditioners up front, solves the grouped systems (threads > 1 splits
// centroid groups across workers) and reduces the statistics. Results do not
// depend on the worker count.
SimulationReport run_campaign_with(const CampaignConfig& config,
                                   const CampaignArtifacts& artifacts,
                                   const SampleSet& realizations);
SimulationReport run_campaign(const CampaignConfig& config);

struct SweepRow {
  int m = 0;
  double relative_energy = 0.0;
  double mean_j = 0.0;
};

// Per-realization preconditioners built from the m-truncated coefficient,
// applied to the full-coefficient systems, for each m in the list. The same
// realizations are reused across the sweep.
std::vector<SweepRow> ideal_sweep(const CampaignConfig& config,
                                  std::span<const int> m_list);

struct FrequencyRow {
  int p = 0;
  double centroid_norm = 0.0;
  double frequency = 0.0;
};

// Monte Carlo attribution frequencies on a fresh sample, sorted by centroid
// norm.
std::vector<FrequencyRow> frequency_profile(const Codebook& codebook, int n_s,
                                            std::uint64_t seed);

struct LoadBalanceStats {
  long max_sum_j = 0;
  long min_sum_j = 0;
  long spread = 0;       // max - min
  double cv_sum_j = 0.0; // coefficient of variation across cells
  double cv_n_p = 0.0;
};

LoadBalanceStats load_balance_stats(const SimulationReport& report);

std::string load_balance_csv(const SimulationReport& report);
std::string frequencies_csv(const std::vector<FrequencyRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string summary_json(const CampaignConfig& config,
                         const SimulationReport& report);

// summary.json and per_centroid.csv under config.output_dir.
void write_campaign_outputs(const CampaignConfig& config,
                            const SimulationReport& report);

}  // namespace vqp
