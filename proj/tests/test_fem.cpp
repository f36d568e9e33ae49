#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "vqp/error.hpp"
#include "vqp/fem.hpp"
#include "vqp/rng.hpp"
#include "vqp/solver.hpp"

using namespace vqp;

TEST_CASE("structured mesh counts and geometry") {
  for (int r : {2, 3, 4, 5, 8}) {
    const TriMesh mesh = make_mesh(r);
    CHECK(mesh.n_nodes() == (r + 1) * (r + 1));
    CHECK(mesh.n_triangles() == 2 * r * r);
    CHECK(mesh.n_interior() == (r - 1) * (r - 1));
    double area = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      CHECK(mesh.triangle_area(t) > 0.0);
      area += mesh.triangle_area(t);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      const bool edge = mesh.xs[i] == 0.0 || mesh.xs[i] == 1.0 ||
                        mesh.ys[i] == 0.0 || mesh.ys[i] == 1.0;
      CHECK(static_cast<bool>(mesh.node_on_boundary[i]) == edge);
    }
  }
  CHECK(make_mesh(2).n_interior() == 1);
  CHECK(make_mesh(4).n_interior() == 9);
  CHECK_THROWS_WITH_AS(make_mesh(1), "mesh-too-coarse", Error);
}

TEST_CASE("hand-assembled system at r=2") {
  const TriMesh mesh = make_mesh(2);
  const std::vector<double> one(mesh.n_nodes(), 1.0);
  const LinearSystem sys = assemble(mesh, one);
  REQUIRE(sys.A.n == 1);
  REQUIRE(sys.A.nnz() == 1);
  CHECK(sys.A.vals[0] == 4.0);
  CHECK(sys.b[0] == 0.25);
  const auto result = pcg(sys, *build_identity(1), 1e-12);
  CHECK(result.x[0] == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("unit-coefficient stiffness is the five-point stencil") {
  const TriMesh mesh = make_mesh(4);
  const std::vector<double> one(mesh.n_nodes(), 1.0);
  const LinearSystem sys = assemble(mesh, one);
  const Eigen::MatrixXd A = oracle::to_dense(sys.A);
  for (int i = 0; i < sys.A.n; ++i) CHECK(A(i, i) == 4.0);
  // center dof of the 3x3 interior grid has all four neighbors present
  CHECK(A(4, 1) == -1.0);
  CHECK(A(4, 3) == -1.0);
  CHECK(A(4, 5) == -1.0);
  CHECK(A(4, 7) == -1.0);
  CHECK(A(4, 0) == 0.0);  // diagonal neighbor carries no entry
}

TEST_CASE("assembly scales linearly in the coefficient") {
  const TriMesh mesh = make_mesh(6);
  const std::vector<double> one(mesh.n_nodes(), 1.0);
  const std::vector<double> two(mesh.n_nodes(), 2.0);
  const LinearSystem s1 = assemble(mesh, one);
  const LinearSystem s2 = assemble(mesh, two);
  REQUIRE(s1.A.nnz() == s2.A.nnz());
  for (int k = 0; k < s1.A.nnz(); ++k) CHECK(s2.A.vals[k] == 2.0 * s1.A.vals[k]);
  CHECK(s2.b == s1.b);

  const auto u1 = pcg(s1, *build_cholesky(s1.A), 1e-13);
  const auto u2 = pcg(s2, *build_cholesky(s2.A), 1e-13);
  for (int i = 0; i < s1.A.n; ++i) {
    CHECK(u2.x[i] == doctest::Approx(0.5 * u1.x[i]).epsilon(1e-10));
  }
}

TEST_CASE("interior row sums vanish for the unit coefficient") {
  const TriMesh mesh = make_mesh(32);
  const std::vector<double> one(mesh.n_nodes(), 1.0);
  const LinearSystem sys = assemble(mesh, one);

  // nodes all of whose mesh neighbors are interior
  std::vector<std::set<int>> neighbors(mesh.n_nodes());
  for (const auto& tri : mesh.triangles) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (a != b) neighbors[tri[a]].insert(tri[b]);
      }
    }
  }
  int checked = 0;
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const int i = mesh.interior_index[node];
    if (i < 0) continue;
    bool deep = true;
    for (int nb : neighbors[node]) {
      if (mesh.node_on_boundary[nb]) deep = false;
    }
    if (!deep) continue;
    double sum = 0.0;
    for (int k = sys.A.row_ptr[i]; k < sys.A.row_ptr[i + 1]; ++k) {
      sum += sys.A.vals[k];
    }
    CHECK(std::abs(sum) < 1e-12);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("symmetry, positivity and load sign for a rough coefficient") {
  const TriMesh mesh = make_mesh(12);
  std::vector<double> kappa(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    kappa[i] = std::exp(2.0 * (uniform_open01(7, i, 0) - 0.5));
  }
  const LinearSystem sys = assemble(mesh, kappa);
  CHECK(sys.A.max_asymmetry() < 1e-12);
  CHECK_NOTHROW(build_cholesky(sys.A));  // SPD
  for (double bi : sys.b) CHECK(bi > 0.0);

  // clamping the coefficient from below keeps the operator SPD
  std::vector<double> clamped = kappa;
  for (double& k : clamped) k = std::max(k, 0.8);
  CHECK_NOTHROW(build_cholesky(assemble(mesh, clamped).A));
}

TEST_CASE("solution matches the sine series oracle at r=32") {
  const TriMesh mesh = make_mesh(32);
  const std::vector<double> one(mesh.n_nodes(), 1.0);
  const LinearSystem sys = assemble(mesh, one);
  const auto result = pcg(sys, *build_cholesky(sys.A), 1e-12);
  REQUIRE(result.record.converged);
  double worst = 0.0;
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const int i = mesh.interior_index[node];
    if (i < 0) continue;
    const double exact = oracle::sine_series_solution(mesh.xs[node], mesh.ys[node]);
    worst = std::max(worst, std::abs(result.x[i] - exact));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("coefficient validation") {
  const TriMesh mesh = make_mesh(3);
  std::vector<double> kappa(mesh.n_nodes(), 1.0);
  kappa[5] = 0.0;
  CHECK_THROWS_WITH_AS(assemble(mesh, kappa), "invalid-coefficient", Error);
  kappa[5] = -2.0;
  CHECK_THROWS_WITH_AS(assemble(mesh, kappa), "invalid-coefficient", Error);
}

TEST_CASE("mesh import reproduces the structured mesh") {
  const TriMesh mesh = make_mesh(3);
  const std::string path = "import_mesh_test.txt";
  {
    std::ofstream out(path);
    out << "# nodes then triangles\n";
    char buf[80];
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", mesh.xs[i], mesh.ys[i]);
      out << buf;
    }
    for (const auto& tri : mesh.triangles) {
      out << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
  }
  const TriMesh imported = import_mesh(path);
  std::remove(path.c_str());
  CHECK(imported.resolution == 0);
  CHECK(imported.n_nodes() == mesh.n_nodes());
  CHECK(imported.n_triangles() == mesh.n_triangles());
  CHECK(imported.boundary_nodes == mesh.boundary_nodes);

  std::vector<double> kappa(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) kappa[i] = 1.0 + 0.5 * uniform_open01(3, i, 1);
  const LinearSystem a = assemble(mesh, kappa);
  const LinearSystem b = assemble(imported, kappa);
  CHECK(a.A.vals == b.A.vals);
  CHECK(a.b == b.b);
  CHECK_THROWS_WITH_AS(import_mesh("no_such_mesh_file.txt"),
                       "artifact-not-found", Error);
}
