#include "foldlab/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "foldlab/errors.hpp"

namespace foldlab::kernels {

namespace {

using Triplet = Eigen::Triplet<double>;

// Local 3x3 stiffness and mass of triangle t, written into 9-entry slots.
void local_matrices(const geometry::Mesh& mesh, int t, Triplet* k_out, Triplet* m_out) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector2d& p0 = mesh.vertices[tri[0]];
  const Eigen::Vector2d& p1 = mesh.vertices[tri[1]];
  const Eigen::Vector2d& p2 = mesh.vertices[tri[2]];
  const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
  if (!(area > 1e-300)) {
    throw AssemblyError("degenerate or inverted triangle " + std::to_string(t), t);
  }
  // Gradients of barycentric coordinates are rotated opposite edges / (2A).
  const Eigen::Vector2d e[3] = {p2 - p1, p0 - p2, p1 - p0};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double k = e[a].dot(e[b]) / (4.0 * area);
      const double m = area / 12.0 * (a == b ? 2.0 : 1.0);
      k_out[3 * a + b] = Triplet(tri[a], tri[b], k);
      m_out[3 * a + b] = Triplet(tri[a], tri[b], m);
    }
  }
}

P1Matrices build(const geometry::Mesh& mesh, const std::vector<Triplet>& k,
                 const std::vector<Triplet>& m) {
  const int n = mesh.num_vertices();
  P1Matrices out;
  out.stiffness.resize(n, n);
  out.mass.resize(n, n);
  out.stiffness.setFromTriplets(k.begin(), k.end());
  out.mass.setFromTriplets(m.begin(), m.end());
  return out;
}

}  // namespace

P1Matrices assemble_p1_serial(const geometry::Mesh& mesh) {
  const std::size_t nt = mesh.triangles.size();
  std::vector<Triplet> k(9 * nt), m(9 * nt);
  for (std::size_t t = 0; t < nt; ++t) local_matrices(mesh, static_cast<int>(t), &k[9 * t], &m[9 * t]);
  return build(mesh, k, m);
}

P1Matrices assemble_p1_parallel(const geometry::Mesh& mesh) {
  const long nt = static_cast<long>(mesh.triangles.size());
  std::vector<Triplet> k(9 * nt), m(9 * nt);
  // Exceptions may not leave an OpenMP region; record the first bad triangle.
  long bad = nt;
#pragma omp parallel for schedule(static) reduction(min : bad)
  for (long t = 0; t < nt; ++t) {
    try {
      local_matrices(mesh, static_cast<int>(t), &k[9 * t], &m[9 * t]);
    } catch (const AssemblyError&) {
      bad = std::min(bad, t);
    }
  }
  if (bad < nt) {
    throw AssemblyError("degenerate or inverted triangle " + std::to_string(bad), static_cast<int>(bad));
  }
  return build(mesh, k, m);
}

double weighted_sum_serial(const double* values, const double* weights, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += values[i] * weights[i];
  return s;
}

double weighted_sum_parallel(const double* values, const double* weights, std::size_t n) {
  const long chunks = static_cast<long>((n + kReduceChunk - 1) / kReduceChunk);
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    const std::size_t lo = c * kReduceChunk;
    const std::size_t hi = std::min(n, lo + kReduceChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i] * weights[i];
    partial[c] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& y, const Eigen::VectorXd& w) {
  const Eigen::Index nb = y.cols();
  Eigen::MatrixXd g(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double s = 0.0;
      for (Eigen::Index q = 0; q < y.rows(); ++q) s += y(q, i) * w[q] * y(q, j);
      g(i, j) = g(j, i) = s;
    }
  }
  return g;
}

Eigen::MatrixXd weighted_gram_parallel(const Eigen::MatrixXd& y, const Eigen::VectorXd& w) {
  const Eigen::Index nb = y.cols();
  const Eigen::MatrixXd wy = w.asDiagonal() * y;
  Eigen::MatrixXd g(nb, nb);
  constexpr Eigen::Index kBlock = 32;
  const long blocks = static_cast<long>((nb + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * kBlock;
    const Eigen::Index cols = std::min(kBlock, nb - lo);
    g.middleCols(lo, cols).noalias() = y.transpose() * wy.middleCols(lo, cols);
  }
  // Symmetrise from the lower triangle so the result is exactly symmetric.
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) g(j, i) = g(i, j);
  }
  return g;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace foldlab::kernels
