#include "vqp/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vqp/error.hpp"

namespace vqp {

int TriMesh::n_interior() const {
  return n_nodes() - static_cast<int>(boundary_nodes.size());
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const double ax = xs[tri[0]], ay = ys[tri[0]];
  const double bx = xs[tri[1]], by = ys[tri[1]];
  const double cx = xs[tri[2]], cy = ys[tri[2]];
  return 0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
}

namespace {

// Boundary flags and interior numbering from coordinates: a node is on the
// boundary iff one coordinate sits on {0,1}.
void finalize_mesh(TriMesh& mesh) {
  const int nn = mesh.n_nodes();
  mesh.node_on_boundary.assign(nn, 0);
  mesh.boundary_nodes.clear();
  mesh.interior_index.assign(nn, -1);
  auto on_edge = [](double v) { return std::abs(v) < 1e-12 || std::abs(v - 1.0) < 1e-12; };
  int next = 0;
  for (int i = 0; i < nn; ++i) {
    if (on_edge(mesh.xs[i]) || on_edge(mesh.ys[i])) {
      mesh.node_on_boundary[i] = 1;
      mesh.boundary_nodes.push_back(i);
    } else {
      mesh.interior_index[i] = next++;
    }
  }
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    if (mesh.triangle_area(t) <= 0.0) {
      std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
    }
    if (mesh.triangle_area(t) <= 0.0) throw Error("mesh-too-coarse");
  }
}

}  // namespace

TriMesh make_mesh(int r) {
  if (r < 2) throw Error("mesh-too-coarse");
  TriMesh mesh;
  mesh.resolution = r;
  const int side = r + 1;
  mesh.xs.resize(static_cast<size_t>(side) * side);
  mesh.ys.resize(static_cast<size_t>(side) * side);
  const double h = 1.0 / r;
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const int id = iy * side + ix;
      mesh.xs[id] = ix * h;
      mesh.ys[id] = iy * h;
    }
  }
  mesh.triangles.reserve(static_cast<size_t>(2) * r * r);
  for (int cy = 0; cy < r; ++cy) {
    for (int cx = 0; cx < r; ++cx) {
      const int a = cy * side + cx;         // lower-left
      const int b = a + 1;                  // lower-right
      const int c = (cy + 1) * side + cx;   // upper-left
      const int d = c + 1;                  // upper-right
      mesh.triangles.push_back({a, b, d});  // diagonal a-d
      mesh.triangles.push_back({a, d, c});
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

TriMesh import_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("artifact-not-found");
  TriMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() == 2) {
      mesh.xs.push_back(std::stod(tokens[0]));
      mesh.ys.push_back(std::stod(tokens[1]));
    } else if (tokens.size() == 3) {
      mesh.triangles.push_back({std::stoi(tokens[0]), std::stoi(tokens[1]),
                                std::stoi(tokens[2])});
    } else {
      throw Error("mesh-file-malformed");
    }
  }
  if (mesh.n_nodes() < 4 || mesh.n_triangles() < 2) throw Error("mesh-too-coarse");
  for (const auto& tri : mesh.triangles) {
    for (int v : tri) {
      if (v < 0 || v >= mesh.n_nodes()) throw Error("mesh-file-malformed");
    }
  }
  mesh.resolution = 0;
  finalize_mesh(mesh);
  return mesh;
}

std::uint64_t mesh_fingerprint(const TriMesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  feed(&mesh.resolution, sizeof(mesh.resolution));
  feed(mesh.xs.data(), mesh.xs.size() * sizeof(double));
  feed(mesh.ys.data(), mesh.ys.size() * sizeof(double));
  feed(mesh.triangles.data(), mesh.triangles.size() * sizeof(mesh.triangles[0]));
  return h;
}

std::vector<double> lumped_mass(const TriMesh& mesh) {
  std::vector<double> area_sum(mesh.n_nodes(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    for (int v : mesh.triangles[t]) area_sum[v] += a;
  }
  for (double& m : area_sum) m /= 3.0;
  return area_sum;
}

void SparseMatrix::matvec(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[col_idx[k]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col_idx[k] == i) d[i] = vals[k];
    }
  }
  return d;
}

double SparseMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int j = col_idx[k];
      // binary search for (j, i)
      const int lo = row_ptr[j], hi = row_ptr[j + 1];
      const auto* begin = col_idx.data() + lo;
      const auto* end = col_idx.data() + hi;
      const auto* it = std::lower_bound(begin, end, i);
      const double aji = (it != end && *it == i) ? vals[lo + (it - begin)] : 0.0;
      worst = std::max(worst, std::abs(vals[k] - aji));
    }
  }
  return worst;
}

SparseMatrix SparseBuilder::build() const {
  SparseMatrix out;
  out.n = n_;
  out.row_ptr.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) {
    auto row = rows_[i];
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    int distinct = 0;
    for (size_t k = 0; k < row.size(); ++k) {
      if (k == 0 || row[k].first != row[k - 1].first) ++distinct;
    }
    out.row_ptr[i + 1] = out.row_ptr[i] + distinct;
  }
  out.col_idx.resize(out.row_ptr[n_]);
  out.vals.resize(out.row_ptr[n_]);
  for (int i = 0; i < n_; ++i) {
    auto row = rows_[i];
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    int at = out.row_ptr[i] - 1;
    int last_col = -1;
    for (const auto& [j, v] : row) {
      if (j != last_col) {
        ++at;
        out.col_idx[at] = j;
        out.vals[at] = v;
        last_col = j;
      } else {
        out.vals[at] += v;
      }
    }
  }
  return out;
}

LinearSystem assemble(const TriMesh& mesh, std::span<const double> coefficient) {
  if (static_cast<int>(coefficient.size()) != mesh.n_nodes())
    throw Error("invalid-coefficient");
  for (double k : coefficient) {
    if (!(k > 0.0) || !std::isfinite(k)) throw Error("invalid-coefficient");
  }

  const int n = mesh.n_interior();
  SparseBuilder builder(n);
  std::vector<double> area_sum(mesh.n_nodes(), 0.0);

  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double x0 = mesh.xs[tri[0]], y0 = mesh.ys[tri[0]];
    const double x1 = mesh.xs[tri[1]], y1 = mesh.ys[tri[1]];
    const double x2 = mesh.xs[tri[2]], y2 = mesh.ys[tri[2]];
    const double area = mesh.triangle_area(t);
    // gradient factors of the P1 basis: grad phi_i = (bi, ci) / (2 area)
    const double b[3] = {y1 - y2, y2 - y0, y0 - y1};
    const double c[3] = {x2 - x1, x0 - x2, x1 - x0};
    const double kbar =
        (coefficient[tri[0]] + coefficient[tri[1]] + coefficient[tri[2]]) / 3.0;
    const double scale = kbar / (4.0 * area);
    for (int i = 0; i < 3; ++i) {
      const int gi = mesh.interior_index[tri[i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = mesh.interior_index[tri[j]];
        if (gj < 0) continue;
        builder.add(gi, gj, scale * (b[i] * b[j] + c[i] * c[j]));
      }
    }
    for (int v : tri) area_sum[v] += area;
  }

  LinearSystem sys;
  sys.A = builder.build();
  sys.b.assign(n, 0.0);
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const int gi = mesh.interior_index[node];
    if (gi >= 0) sys.b[gi] = area_sum[node] / 3.0;
  }
  return sys;
}

}  // namespace vqp
