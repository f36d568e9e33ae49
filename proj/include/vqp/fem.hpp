#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vqp {

// P1 triangulation of the unit square (0,1)^2. Structured meshes split each
// of r x r cells into two right triangles along the same diagonal; imported
// meshes may be arbitrary triangulations of the square.
struct TriMesh {
  int resolution = 0;  // r for structured meshes, 0 for imported ones
  std::vector<double> xs, ys;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise node triples
  std::vector<int> boundary_nodes;            // ascending
  std::vector<char> node_on_boundary;
  std::vector<int> interior_index;  // node -> interior dof, -1 on the boundary

  int n_nodes() const { return static_cast<int>(xs.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_interior() const;
  double triangle_area(int t) const;
};

// Structured r x r mesh; throws "mesh-too-coarse" for r < 2.
TriMesh make_mesh(int r);

// Text import: lines with two floats are nodes, lines with three integers are
// 0-based triangles; '#' starts a comment. Triangles are reoriented
// counterclockwise if needed.
TriMesh import_mesh(const std::string& path);

// FNV-1a over the node coordinates and connectivity; identifies the mesh a
// stored KL basis was built on.
std::uint64_t mesh_fingerprint(const TriMesh& mesh);

// Row-sum (lumped) P1 mass diagonal over all nodes: a third of the area of
// the triangles touching each node.
std::vector<double> lumped_mass(const TriMesh& mesh);

// Square CSR matrix with sorted column indices per row.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n + 1
  std::vector<int> col_idx;
  std::vector<double> vals;

  int nnz() const { return static_cast<int>(vals.size()); }
  void matvec(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;
  double max_asymmetry() const;  // max |a_ij - a_ji|
};

// Helper for assembling CSR matrices from scattered contributions.
class SparseBuilder {
 public:
  explicit SparseBuilder(int n) : n_(n), rows_(n) {}
  void add(int i, int j, double v) { rows_[i].emplace_back(j, v); }
  SparseMatrix build() const;  // sorts columns, merges duplicates

 private:
  int n_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

struct LinearSystem {
  SparseMatrix A;
  std::vector<double> b;
};

// Galerkin stiffness of -div(kappa grad u) = 1 with homogeneous Dirichlet
// data, reduced to interior dofs by row/column elimination. `coefficient`
// holds nodal kappa values over the full mesh; each triangle uses the mean of
// its three vertex values. Throws "invalid-coefficient" unless the
// coefficient is finite and strictly positive everywhere.
LinearSystem assemble(const TriMesh& mesh, std::span<const double> coefficient);

}  // namespace vqp
