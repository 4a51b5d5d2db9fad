#pragma once

#include <Eigen/Dense>
#include <vector>

#include "foldlab/testfun.hpp"

namespace foldlab::testfun::detail {

/// g_AB evaluated at every node of the frame's cut rule.
struct FoldSample {
  geometry::Quadrature q;
  std::vector<TestFieldEvaluation> ev;
};

/// Caches the analytic rule (which does not depend on the frame) and the
/// eigenfunction samples on it; mesh rules are rebuilt per frame.
class FoldContext {
 public:
  FoldContext(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
              const eigensolve::SpectralResult& spectrum, int max_mode);

  FoldSample sample(const FoldingFrame& frame) const;
  /// Values of eigenfunction j on the rule used by `s`.
  std::vector<double> mode(const FoldSample& s, int j) const;

  const FieldDomain& domain() const { return domain_; }
  const specfun::WeinbergerProfile& profile() const { return profile_; }
  double scale() const;

 private:
  const FieldDomain& domain_;
  const specfun::WeinbergerProfile& profile_;
  const eigensolve::SpectralResult& spectrum_;
  int max_mode_;
  bool analytic_rule_;
  geometry::Quadrature fixed_;
  std::vector<std::vector<double>> fixed_modes_;
};

/// Column-wise weighted sums of a nodes-by-m matrix (deterministic kernel).
Eigen::VectorXd integrate(const Eigen::MatrixXd& values, const std::vector<double>& weights);

}  // namespace foldlab::testfun::detail
