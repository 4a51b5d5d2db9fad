// Block preconditioned eigensolver for K v = mu M v on the M-orthogonal
// complement of a few known null vectors.
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "foldlab/eigensolve.hpp"
#include "foldlab/errors.hpp"

namespace foldlab::eigensolve::detail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct Basis {
  MatrixXd v;   // M-orthonormal columns
  MatrixXd mv;  // M * v
};

// Removes the span of q (M-orthonormal, with mq = M q) from b, then makes
// the remaining columns M-orthonormal. Directions that are numerically
// dependent are dropped, so the result can have fewer columns.
Basis orthonormalize(const SpMat& m, const MatrixXd& q, const MatrixXd& mq, MatrixXd b) {
  Basis out;
  for (int pass = 0; pass < 2; ++pass) {
    if (q.cols() > 0) {
      b -= q * (mq.transpose() * b);
      b -= q * (mq.transpose() * b);
    }
    MatrixXd mb = m * b;
    // Unit M-norm columns keep the drop threshold scale free.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double nrm2 = b.col(j).dot(mb.col(j));
      if (nrm2 > 0.0 && std::isfinite(nrm2)) {
        b.col(j) /= std::sqrt(nrm2);
        mb.col(j) /= std::sqrt(nrm2);
        keep.push_back(j);
      }
    }
    b = b(Eigen::all, keep).eval();
    mb = mb(Eigen::all, keep).eval();
    if (b.cols() == 0) break;
    MatrixXd g = b.transpose() * mb;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    const VectorXd& d = es.eigenvalues();
    const double cut = 1e-10 * d.maxCoeff();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d[j] > cut) cols.push_back(j);
    }
    MatrixXd t(b.cols(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) t.col(c) = es.eigenvectors().col(cols[c]) / std::sqrt(d[cols[c]]);
    b = b * t;
    out.mv = mb * t;
  }
  out.v = std::move(b);
  if (out.v.cols() == 0) out.mv.resize(m.rows(), 0);
  return out;
}

MatrixXd hcat(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd c(a.rows(), a.cols() + b.cols());
  c << a, b;
  return c;
}

}  // namespace

Ritz lobpcg_solve(const kernels::P1Matrices& km, const MatrixXd& z, int count, double tol, double shift,
                  const SolverOptions& options) {
  const SpMat& k = km.stiffness;
  const SpMat& m = km.mass;
  const Eigen::Index n = k.rows();
  const int block = count + std::max(3, count / 4);

  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(SpMat(k + shift * m));
  if (ldlt.info() != Eigen::Success) throw SolverError("factorization of the shifted operator failed");
  const MatrixXd mz = m * z;
  auto project = [&](MatrixXd& b) {
    if (z.cols() > 0) b -= z * (mz.transpose() * b);
  };
  auto precondition = [&](const MatrixXd& r) {
    MatrixXd w = ldlt.solve(r);
    project(w);
    return w;
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  MatrixXd x0(n, block);
  for (Eigen::Index j = 0; j < block; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x0(i, j) = normal(rng);
  }
  Basis x = orthonormalize(m, z, mz, precondition(m * x0));
  if (x.v.cols() < block) throw SolverError("starting block is rank deficient");

  // Initial Rayleigh-Ritz on the block itself.
  VectorXd theta;
  {
    MatrixXd g = x.v.transpose() * (k * x.v);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    theta = es.eigenvalues();
    x.v = x.v * es.eigenvectors();
    x.mv = x.mv * es.eigenvectors();
  }

  MatrixXd p(n, 0);
  VectorXd best = VectorXd::Constant(count, std::numeric_limits<double>::infinity());
  Ritz out;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const MatrixXd kx = k * x.v;
    MatrixXd r = kx - x.mv * theta.asDiagonal();
    VectorXd res(block);
    for (int j = 0; j < block; ++j) res[j] = r.col(j).norm() / x.mv.col(j).norm();
    best = best.cwiseMin(res.head(count));
    if ((res.head(count).array() <= tol).all()) {
      out.values = theta.head(count);
      out.vectors = x.v.leftCols(count);
      out.residuals = res.head(count);
      out.iterations = it;
      return out;
    }

    std::vector<Eigen::Index> active;
    for (int j = 0; j < block; ++j) {
      if (res[j] > 0.1 * tol) active.push_back(j);
    }
    Basis w = orthonormalize(m, x.v, x.mv, precondition(r(Eigen::all, active)));
    MatrixXd s = hcat(x.v, w.v);
    MatrixXd ms = hcat(x.mv, w.mv);
    if (p.cols() > 0) {
      Basis pp = orthonormalize(m, s, ms, p(Eigen::all, active));
      s = hcat(s, pp.v);
      ms = hcat(ms, pp.mv);
    }
    MatrixXd g = s.transpose() * (k * s);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    const MatrixXd c = es.eigenvectors().leftCols(block);
    theta = es.eigenvalues().head(block);
    const Eigen::Index rest = s.cols() - block;
    p = s.rightCols(rest) * c.bottomRows(rest);
    x.v = s * c;
    x.mv = ms * c;
  }
  std::vector<double> b(best.data(), best.data() + best.size());
  throw SolverError("block eigensolver did not converge in " + std::to_string(options.max_iterations) +
                        " iterations; worst best residual " + std::to_string(best.maxCoeff()),
                    b);
}

}  // namespace foldlab::eigensolve::detail
