#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>

#include "foldlab/geometry.hpp"

// Hot loops in two flavours: a plain serial reference and an OpenMP version.
// The parallel versions partition work in fixed-size chunks that do not
// depend on the thread count, so their results are bitwise reproducible for
// any number of threads.
namespace foldlab::kernels {

struct P1Matrices {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;
};

/// P1 stiffness and consistent mass. Throws AssemblyError on a degenerate
/// triangle.
P1Matrices assemble_p1_serial(const geometry::Mesh& mesh);
P1Matrices assemble_p1_parallel(const geometry::Mesh& mesh);

inline constexpr std::size_t kReduceChunk = 2048;

/// sum_k values[k] * weights[k]
double weighted_sum_serial(const double* values, const double* weights, std::size_t n);
double weighted_sum_parallel(const double* values, const double* weights, std::size_t n);

/// Y^T diag(w) Y for a nodes-by-basis matrix Y.
Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& y, const Eigen::VectorXd& w);
Eigen::MatrixXd weighted_gram_parallel(const Eigen::MatrixXd& y, const Eigen::VectorXd& w);

/// Worker count used by the parallel kernels (OpenMP max threads).
int max_threads();
void set_threads(int n);

}  // namespace foldlab::kernels
