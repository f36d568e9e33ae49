#include "vqp/artifacts.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vqp/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "artifact files are little-endian");

namespace vqp {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_block(std::ofstream& out, const std::vector<double>& block) {
  out.write(reinterpret_cast<const char*>(block.data()),
            static_cast<std::streamsize>(block.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& block, size_t count) {
  block.resize(count);
  in.read(reinterpret_cast<char*>(block.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw Error("artifact-corrupt");
}

json read_header(std::ifstream& in, const char* expected_format) {
  std::string line;
  if (!std::getline(in, line)) throw Error("artifact-corrupt");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != expected_format) {
    throw Error("artifact-corrupt");
  }
  return header;
}

}  // namespace

void save_kl_basis(const std::string& path, const KLBasis& basis) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("artifact-write-failed");
  char hash[19];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(basis.mesh_hash));
  out << "{\"format\":\"klb\",\"version\":1"
      << ",\"n_nodes\":" << basis.n_nodes() << ",\"n_kl\":" << basis.n_kl()
      << ",\"total_variance\":" << format_double(basis.total_variance)
      << ",\"sigma2\":" << format_double(basis.sigma2)
      << ",\"ell\":" << format_double(basis.ell)
      << ",\"mesh_resolution\":" << basis.mesh_resolution
      << ",\"mesh_hash\":\"" << hash << "\"}\n";
  write_block(out, basis.eigenvalues);
  write_block(out, basis.eigenvectors);
  write_block(out, basis.mass);
  if (!out) throw Error("artifact-write-failed");
}

KLBasis load_kl_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("artifact-not-found");
  const json header = read_header(in, "klb");
  KLBasis basis;
  const size_t n_nodes = header.at("n_nodes").get<size_t>();
  const size_t n_kl = header.at("n_kl").get<size_t>();
  basis.total_variance = header.at("total_variance").get<double>();
  basis.sigma2 = header.at("sigma2").get<double>();
  basis.ell = header.at("ell").get<double>();
  basis.mesh_resolution = header.at("mesh_resolution").get<int>();
  basis.mesh_hash = std::stoull(header.at("mesh_hash").get<std::string>(),
                                nullptr, 16);
  read_block(in, basis.eigenvalues, n_kl);
  read_block(in, basis.eigenvectors, n_kl * n_nodes);
  read_block(in, basis.mass, n_nodes);
  return basis;
}

void save_codebook(const std::string& path, const Codebook& codebook) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("artifact-write-failed");
  out << "{\"format\":\"qnt\",\"version\":1"
      << ",\"m\":" << codebook.m << ",\"P\":" << codebook.P
      << ",\"map\":\"" << to_string(codebook.t2.kind) << "\""
      << ",\"method\":\"" << to_string(codebook.method) << "\""
      << ",\"seed\":" << codebook.seed << ",\"lambdas\":[";
  for (int k = 0; k < codebook.m; ++k) {
    out << (k ? "," : "") << format_double(codebook.t2.lambdas[k]);
  }
  out << "]";
  if (codebook.method == QuantMethod::Grid) {
    out << ",\"s\":" << format_double(codebook.grid_s);
  }
  out << "}\n";
  write_block(out, codebook.centroids);
  if (!out) throw Error("artifact-write-failed");
}

Codebook load_codebook(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("artifact-not-found");
  const json header = read_header(in, "qnt");
  Codebook codebook;
  codebook.m = header.at("m").get<int>();
  codebook.P = header.at("P").get<int>();
  codebook.t2.kind = map_kind_from_string(header.at("map").get<std::string>());
  codebook.t2.lambdas = header.at("lambdas").get<std::vector<double>>();
  codebook.method = method_from_string(header.at("method").get<std::string>());
  codebook.seed = header.value("seed", 0ull);
  read_block(in, codebook.centroids,
             static_cast<size_t>(codebook.P) * codebook.m);
  if (codebook.method == QuantMethod::Grid) {
    codebook.grid_s = header.at("s").get<double>();
    codebook.latent_centroids = grid_latent_sites(codebook.m, codebook.grid_s);
  }
  codebook.validate();
  return codebook;
}

}  // namespace vqp
