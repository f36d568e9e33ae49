#include "vqp/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <thread>

#include <nlohmann/json.hpp>

#include "vqp/artifacts.hpp"
#include "vqp/error.hpp"

namespace vqp {

using nlohmann::json;

const char* to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::Identity: return "identity";
    case PrecondKind::Cholesky: return "cholesky";
    case PrecondKind::BlockJacobi: return "block_jacobi";
    default: return "amg";
  }
}

PrecondKind precond_from_string(const std::string& s) {
  if (s == "identity") return PrecondKind::Identity;
  if (s == "cholesky") return PrecondKind::Cholesky;
  if (s == "block_jacobi" || s == "bj") return PrecondKind::BlockJacobi;
  if (s == "amg") return PrecondKind::Amg;
  throw Error("invalid-preconditioner-kind");
}

void CampaignConfig::validate() const {
  if (m > n_kl || m < 0) throw Error("mode-count-out-of-range");
  if (!(eps > 0.0) || eps >= 1.0) throw Error("invalid-tolerance");
  if (n_realizations < 1) throw Error("invalid-config");
  if (threads < 1) throw Error("invalid-config");
}

CampaignConfig config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid-config");
  CampaignConfig c;
  c.mesh_resolution = j.value("mesh_resolution", c.mesh_resolution);
  c.sigma2 = j.value("sigma2", c.sigma2);
  c.ell = j.value("ell", c.ell);
  c.n_kl = j.value("n_kl", c.n_kl);
  c.m = j.value("m", c.m);
  if (j.contains("precond"))
    c.precond = precond_from_string(j.at("precond").get<std::string>());
  c.eps = j.value("eps", c.eps);
  c.n_realizations = j.value("n_realizations", c.n_realizations);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.threads = j.value("threads", c.threads);
  c.mesh_file = j.value("mesh_file", c.mesh_file);
  c.basis_file = j.value("basis_file", c.basis_file);
  c.codebook_file = j.value("codebook_file", c.codebook_file);
  if (j.contains("quantizer")) {
    const json& q = j.at("quantizer");
    if (q.contains("method"))
      c.quantizer.method = method_from_string(q.at("method").get<std::string>());
    c.quantizer.P = q.value("P", c.quantizer.P);
    if (q.contains("map"))
      c.quantizer.map = map_kind_from_string(q.at("map").get<std::string>());
    c.quantizer.n_s = q.value("ns", c.quantizer.n_s);
    c.quantizer.seed = q.value("seed", c.quantizer.seed);
    c.quantizer.init_seed = q.value("init_seed", c.quantizer.init_seed);
    c.quantizer.gamma0 = q.value("gamma0", c.quantizer.gamma0);
    c.quantizer.schedule_a = q.value("schedule_a", c.quantizer.schedule_a);
    c.quantizer.passes = q.value("passes", c.quantizer.passes);
  }
  c.validate();
  return c;
}

CampaignConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("artifact-not-found");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const CampaignConfig& c) {
  std::ostringstream out;
  out << "{\"mesh_resolution\":" << c.mesh_resolution
      << ",\"sigma2\":" << format_double(c.sigma2)
      << ",\"ell\":" << format_double(c.ell) << ",\"n_kl\":" << c.n_kl
      << ",\"m\":" << c.m << ",\"quantizer\":{\"method\":\""
      << to_string(c.quantizer.method) << "\",\"P\":" << c.quantizer.P
      << ",\"map\":\"" << to_string(c.quantizer.map)
      << "\",\"ns\":" << c.quantizer.n_s << ",\"seed\":" << c.quantizer.seed
      << ",\"init_seed\":" << c.quantizer.init_seed
      << ",\"gamma0\":" << format_double(c.quantizer.gamma0)
      << ",\"schedule_a\":" << format_double(c.quantizer.schedule_a)
      << ",\"passes\":" << c.quantizer.passes << "}"
      << ",\"precond\":\"" << to_string(c.precond) << "\""
      << ",\"eps\":" << format_double(c.eps)
      << ",\"n_realizations\":" << c.n_realizations
      << ",\"master_seed\":" << c.master_seed;
  if (!c.mesh_file.empty()) out << ",\"mesh_file\":\"" << c.mesh_file << "\"";
  if (!c.basis_file.empty()) out << ",\"basis_file\":\"" << c.basis_file << "\"";
  if (!c.codebook_file.empty())
    out << ",\"codebook_file\":\"" << c.codebook_file << "\"";
  out << "}";
  return out.str();
}

namespace {

std::unique_ptr<Preconditioner> build_preconditioner(PrecondKind kind,
                                                     const SparseMatrix& A) {
  switch (kind) {
    case PrecondKind::Identity: return build_identity(A.n);
    case PrecondKind::Cholesky: return build_cholesky(A);
    case PrecondKind::BlockJacobi:
      return build_block_jacobi(A, default_block_count(A.n));
    default: return build_amg(A);
  }
}

Codebook build_codebook(const QuantizerSpec& spec, const KLBasis& basis,
                        int m) {
  T2Map t2{spec.map, {basis.eigenvalues.begin(), basis.eigenvalues.begin() + m}};
  if (spec.method == QuantMethod::Grid) return grid_codebook(t2, m);
  const SampleSet training = draw_standard_normal(spec.n_s, m, spec.seed);
  if (spec.method == QuantMethod::KMeans) {
    return kmeans(training, t2, spec.P, spec.init_seed);
  }
  return clvq(training, t2, spec.P, spec.init_seed, spec.gamma0,
              spec.schedule_a, spec.passes);
}

// Runs fn(slot) for every slot in [0, count) on `threads` workers. Slots are
// claimed through an atomic counter; each slot writes only its own outputs,
// so the result is identical for any worker count.
void parallel_for_slots(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int s = 0; s < count; ++s) fn(s);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int s = next.fetch_add(1);
        if (s >= count) return;
        fn(s);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

CampaignArtifacts prepare_campaign(const CampaignConfig& config) {
  config.validate();
  CampaignArtifacts art;
  art.mesh = config.mesh_file.empty() ? make_mesh(config.mesh_resolution)
                                      : import_mesh(config.mesh_file);
  if (config.basis_file.empty()) {
    const CovarianceKernel kernel(config.sigma2, config.ell);
    art.basis = build_kl_basis(kernel, art.mesh, config.n_kl);
  } else {
    art.basis = load_kl_basis(config.basis_file);
    if (art.basis.mesh_hash != mesh_fingerprint(art.mesh))
      throw Error("artifact-mismatch");
  }
  if (config.m > art.basis.n_kl()) throw Error("mode-count-out-of-range");
  if (config.codebook_file.empty()) {
    art.codebook = build_codebook(config.quantizer, art.basis, config.m);
  } else {
    art.codebook = load_codebook(config.codebook_file);
    if (art.codebook.m != config.m) throw Error("artifact-mismatch");
  }
  return art;
}

SampleSet draw_realizations(const CampaignConfig& config, int n_kl) {
  return draw_standard_normal(config.n_realizations, n_kl, config.master_seed);
}

SimulationReport run_campaign_with(const CampaignConfig& config,
                                   const CampaignArtifacts& artifacts,
                                   const SampleSet& realizations) {
  const Codebook& codebook = artifacts.codebook;
  const KLBasis& basis = artifacts.basis;
  const int P = codebook.P;
  const int n_real = realizations.n;

  SimulationReport report;
  report.n_realizations = n_real;
  report.assignments.resize(n_real);
  report.records.resize(n_real);

  for (int i = 0; i < n_real; ++i) {
    const auto row = realizations.row(i);
    report.assignments[i] =
        assign(codebook, row.subspan(0, static_cast<size_t>(codebook.m)));
  }

  // all preconditioners are built up front and shared read-only
  std::vector<std::unique_ptr<Preconditioner>> preconditioners(P);
  for (int p = 0; p < P; ++p) {
    const auto coeff = centroid_coefficient(codebook, p, basis);
    const LinearSystem centroid_system = assemble(artifacts.mesh, coeff);
    preconditioners[p] = build_preconditioner(config.precond, centroid_system.A);
    preconditioners[p]->built_from = p;
  }

  std::vector<std::vector<int>> groups(P);
  for (int i = 0; i < n_real; ++i) groups[report.assignments[i]].push_back(i);
  std::vector<int> active;
  for (int p = 0; p < P; ++p) {
    if (!groups[p].empty()) active.push_back(p);
  }

  // one centroid group per work item, realizations solved in index order
  parallel_for_slots(
      static_cast<int>(active.size()), config.threads, [&](int slot) {
        const int p = active[slot];
        for (int i : groups[p]) {
          const auto xi = realizations.row(i);
          const auto coeff = transport(lift(basis, xi));
          const LinearSystem system = assemble(artifacts.mesh, coeff);
          report.records[i] =
              pcg(system, *preconditioners[p], config.eps).record;
        }
      });

  report.per_centroid.assign(P, {});
  std::vector<long> conv_count(P, 0);
  std::vector<long> conv_sum(P, 0);
  long global_conv_sum = 0, global_conv = 0;
  for (int i = 0; i < n_real; ++i) {
    const int p = report.assignments[i];
    const SolveRecord& rec = report.records[i];
    report.per_centroid[p].n_p += 1;
    report.per_centroid[p].sum_j += rec.iterations;
    report.total_iterations += rec.iterations;
    if (rec.converged) {
      conv_count[p] += 1;
      conv_sum[p] += rec.iterations;
      global_conv += 1;
      global_conv_sum += rec.iterations;
    } else {
      report.unconverged += 1;
    }
  }
  for (int p = 0; p < P; ++p) {
    report.per_centroid[p].centroid_norm = codebook.centroid_norm(p);
    if (conv_count[p] > 0) {
      report.per_centroid[p].mean_j =
          static_cast<double>(conv_sum[p]) / conv_count[p];
    }
  }
  report.mean_j =
      global_conv > 0 ? static_cast<double>(global_conv_sum) / global_conv : 0.0;
  report.max_sum_j = 0;
  report.min_sum_j = 0;
  if (P > 0) {
    auto [mn, mx] = std::minmax_element(
        report.per_centroid.begin(), report.per_centroid.end(),
        [](const CentroidStats& a, const CentroidStats& b) {
          return a.sum_j < b.sum_j;
        });
    report.min_sum_j = mn->sum_j;
    report.max_sum_j = mx->sum_j;
  }
  return report;
}

SimulationReport run_campaign(const CampaignConfig& config) {
  const CampaignArtifacts artifacts = prepare_campaign(config);
  const SampleSet realizations =
      draw_realizations(config, artifacts.basis.n_kl());
  return run_campaign_with(config, artifacts, realizations);
}

std::vector<SweepRow> ideal_sweep(const CampaignConfig& config,
                                  std::span<const int> m_list) {
  config.validate();
  CampaignConfig cfg = config;
  cfg.codebook_file.clear();
  const TriMesh mesh = cfg.mesh_file.empty() ? make_mesh(cfg.mesh_resolution)
                                             : import_mesh(cfg.mesh_file);
  KLBasis basis;
  if (cfg.basis_file.empty()) {
    basis = build_kl_basis(CovarianceKernel(cfg.sigma2, cfg.ell), mesh, cfg.n_kl);
  } else {
    basis = load_kl_basis(cfg.basis_file);
    if (basis.mesh_hash != mesh_fingerprint(mesh)) throw Error("artifact-mismatch");
  }
  for (int m : m_list) {
    if (m < 0 || m > basis.n_kl()) throw Error("mode-count-out-of-range");
  }

  const SampleSet realizations = draw_realizations(cfg, basis.n_kl());
  const int n_real = realizations.n;
  const int n_m = static_cast<int>(m_list.size());
  std::vector<SolveRecord> records(static_cast<size_t>(n_real) * n_m);

  parallel_for_slots(n_real, cfg.threads, [&](int i) {
    const auto xi = realizations.row(i);
    const LinearSystem system = assemble(mesh, transport(lift(basis, xi)));
    for (int im = 0; im < n_m; ++im) {
      const auto chi = xi.subspan(0, static_cast<size_t>(m_list[im]));
      const LinearSystem truncated = assemble(mesh, transport(lift(basis, chi)));
      const auto precond = build_preconditioner(cfg.precond, truncated.A);
      records[static_cast<size_t>(i) * n_m + im] =
          pcg(system, *precond, cfg.eps).record;
    }
  });

  std::vector<SweepRow> rows(n_m);
  for (int im = 0; im < n_m; ++im) {
    long sum = 0, count = 0;
    for (int i = 0; i < n_real; ++i) {
      const SolveRecord& rec = records[static_cast<size_t>(i) * n_m + im];
      if (rec.converged) {
        sum += rec.iterations;
        count += 1;
      }
    }
    rows[im].m = m_list[im];
    rows[im].relative_energy = relative_energy(basis, m_list[im]);
    rows[im].mean_j = count > 0 ? static_cast<double>(sum) / count : 0.0;
  }
  return rows;
}

std::vector<FrequencyRow> frequency_profile(const Codebook& codebook, int n_s,
                                            std::uint64_t seed) {
  const SampleSet samples = draw_standard_normal(n_s, codebook.m, seed);
  std::vector<long> counts(codebook.P, 0);
  for (int i = 0; i < n_s; ++i) counts[assign(codebook, samples.row(i))] += 1;
  std::vector<FrequencyRow> rows(codebook.P);
  for (int p = 0; p < codebook.P; ++p) {
    rows[p] = {p, codebook.centroid_norm(p),
               static_cast<double>(counts[p]) / n_s};
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.centroid_norm != b.centroid_norm ? a.centroid_norm < b.centroid_norm
                                              : a.p < b.p;
  });
  return rows;
}

LoadBalanceStats load_balance_stats(const SimulationReport& report) {
  LoadBalanceStats stats;
  stats.max_sum_j = report.max_sum_j;
  stats.min_sum_j = report.min_sum_j;
  stats.spread = report.max_sum_j - report.min_sum_j;
  const size_t P = report.per_centroid.size();
  if (P == 0) return stats;
  double mean_sum = 0.0, mean_np = 0.0;
  for (const auto& c : report.per_centroid) {
    mean_sum += static_cast<double>(c.sum_j);
    mean_np += static_cast<double>(c.n_p);
  }
  mean_sum /= P;
  mean_np /= P;
  double var_sum = 0.0, var_np = 0.0;
  for (const auto& c : report.per_centroid) {
    var_sum += (c.sum_j - mean_sum) * (c.sum_j - mean_sum);
    var_np += (c.n_p - mean_np) * (c.n_p - mean_np);
  }
  var_sum /= P;
  var_np /= P;
  if (mean_sum > 0.0) stats.cv_sum_j = std::sqrt(var_sum) / mean_sum;
  if (mean_np > 0.0) stats.cv_n_p = std::sqrt(var_np) / mean_np;
  return stats;
}

std::string load_balance_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "p,centroid_norm,n_p,mean_J,sum_J\n";
  for (size_t p = 0; p < report.per_centroid.size(); ++p) {
    const auto& c = report.per_centroid[p];
    out << p << "," << format_double(c.centroid_norm) << "," << c.n_p << ","
        << format_double(c.mean_j) << "," << c.sum_j << "\n";
  }
  return out.str();
}

std::string frequencies_csv(const std::vector<FrequencyRow>& rows) {
  std::ostringstream out;
  out << "p,centroid_norm,f_p\n";
  for (const auto& row : rows) {
    out << row.p << "," << format_double(row.centroid_norm) << ","
        << format_double(row.frequency) << "\n";
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "m,relative_energy,mean_J\n";
  for (const auto& row : rows) {
    out << row.m << "," << format_double(row.relative_energy) << ","
        << format_double(row.mean_j) << "\n";
  }
  return out.str();
}

std::string summary_json(const CampaignConfig& config,
                         const SimulationReport& report) {
  const LoadBalanceStats stats = load_balance_stats(report);
  std::ostringstream out;
  out << "{\"config\":" << config_to_json(config) << ",\"report\":{"
      << "\"n_realizations\":" << report.n_realizations
      << ",\"mean_j\":" << format_double(report.mean_j)
      << ",\"total_iterations\":" << report.total_iterations
      << ",\"max_sum_j\":" << report.max_sum_j
      << ",\"min_sum_j\":" << report.min_sum_j
      << ",\"sum_j_spread\":" << stats.spread
      << ",\"sum_j_cv\":" << format_double(stats.cv_sum_j)
      << ",\"n_p_cv\":" << format_double(stats.cv_n_p)
      << ",\"unconverged\":" << report.unconverged << "}}\n";
  return out.str();
}

void write_campaign_outputs(const CampaignConfig& config,
                            const SimulationReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  {
    std::ofstream out(fs::path(config.output_dir) / "summary.json",
                      std::ios::binary);
    if (!out) throw Error("artifact-write-failed");
    out << summary_json(config, report);
  }
  {
    std::ofstream out(fs::path(config.output_dir) / "per_centroid.csv",
                      std::ios::binary);
    if (!out) throw Error("artifact-write-failed");
    out << load_balance_csv(report);
  }
}

}  // namespace vqp
