#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "foldlab/geometry.hpp"
#include "foldlab/kernels.hpp"

namespace foldlab::eigensolve {

/// Closed-form Neumann eigenfunction of one component of a separable domain.
struct AnalyticMode {
  enum class Kind { Box, Disk, Ball };
  Kind kind = Kind::Box;
  int component = 0;          // index into geometry::components(spec)
  std::array<int, 3> index{};  // box: (m1, m2, m3); disk: (ell, s, cos=0/sin=1); ball: (ell, s, m)
  double eigenvalue = 0.0;
  double wavenumber = 0.0;     // sqrt(eigenvalue)
  double normalization = 1.0;  // makes the mode L2-normalized on the whole domain

  std::string describe() const;
};

/// Ascending eigenvalues plus L2(Omega)-orthonormal eigenfunctions.
struct SpectralResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;  // ||K v - mu M v|| / ||M v||; zero for analytic results
  double multiplicity_tol = 1e-6;  // relative; the absolute floor is 1e-8
  std::vector<std::vector<int>> clusters;

  // Exactly one of these is filled.
  std::vector<Eigen::VectorXd> eigenfunctions;  // nodal P1 coefficients
  std::vector<AnalyticMode> modes;

  std::vector<geometry::PlacedDomain> parts;  // components, for analytic evaluation
  std::string label;   // domain or mesh description for reports
  std::string method;  // "analytic", "lobpcg" or "dense"
  std::uint64_t mesh_checksum = 0;
  int num_vertices = 0;
  int iterations = 0;
  int components = 1;
  double tolerance = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return eigenvalues.size(); }
  bool analytic() const { return !modes.empty(); }
  /// Value of the j-th eigenfunction at x (analytic results only).
  double eval(std::size_t j, const geometry::Point& x) const;
  /// Values of eigenfunction j at the nodes of q. Needs `mesh` for FEM results.
  std::vector<double> sample(std::size_t j, const geometry::Quadrature& q,
                             const geometry::Mesh* mesh = nullptr) const;

  nlohmann::json to_json() const;
};

/// Groups indices of sorted eigenvalues lying within max(1e-8, rel * mu).
std::vector<std::vector<int>> cluster_eigenvalues(const std::vector<double>& values, double rel = 1e-6);

/// First k eigenpairs of disks, rectangles, balls, boxes and unions of them.
/// Throws ValidityError for other families.
SpectralResult analytic_spectrum(const geometry::DomainSpec& spec, int k);
bool has_analytic_spectrum(const geometry::DomainSpec& spec);

/// P1 stiffness and consistent mass (parallel kernel).
kernels::P1Matrices assemble(const geometry::Mesh& mesh);

struct SolverOptions {
  enum class Method { Auto, Lobpcg, Dense };
  Method method = Method::Auto;
  std::uint64_t seed = 20240611;
  int max_iterations = 600;
  int dense_limit = 600;  // Auto picks dense below this many unknowns
};

/// First k generalized eigenpairs of (K, M) with per-pair residual <= tol.
/// One exact zero mode per connected component comes first. Throws
/// SolverError if the iteration budget runs out.
SpectralResult fem_spectrum(const geometry::Mesh& mesh, int k, double tol = 1e-8,
                            const SolverOptions& options = {});

/// v^T K v / v^T M v. Throws DomainError if the denominator vanishes.
double rayleigh_quotient(const geometry::Mesh& mesh, const Eigen::VectorXd& nodal);
double rayleigh_quotient(const kernels::P1Matrices& km, const Eigen::VectorXd& nodal);

/// Nodal interpolant of f(x, y).
template <class F>
Eigen::VectorXd interpolate(const geometry::Mesh& mesh, F&& f) {
  Eigen::VectorXd v(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i) v[i] = f(mesh.vertices[i].x(), mesh.vertices[i].y());
  return v;
}

namespace detail {
// Dense and block solvers on the M-orthogonal complement of the columns of z
// (assumed M-orthonormal). Return `count` Ritz pairs, ascending.
struct Ritz {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;
  int iterations = 0;
};
Ritz dense_solve(const kernels::P1Matrices& km, const Eigen::MatrixXd& z, int count);
Ritz lobpcg_solve(const kernels::P1Matrices& km, const Eigen::MatrixXd& z, int count, double tol,
                  double shift, const SolverOptions& options);
Eigen::VectorXd residual_norms(const kernels::P1Matrices& km, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& mu);
}  // namespace detail

}  // namespace foldlab::eigensolve
