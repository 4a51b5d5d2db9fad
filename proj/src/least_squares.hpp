// Thin wrapper over Eigen's Levenberg-Marquardt with central differences.
#pragma once

#include <functional>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

namespace foldlab::detail {

// Functor shape expected by Eigen's Levenberg-Marquardt.
struct ResidualFunctor : Eigen::DenseFunctor<double> {
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> f;
  ResidualFunctor(int inputs, int values, std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> fn)
      : Eigen::DenseFunctor<double>(inputs, values), f(std::move(fn)) {}
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    f(x, r);
    return 0;
  }
};

// Runs LM from x; x is updated in place.
inline void least_squares(ResidualFunctor fn, Eigen::VectorXd& x, int max_evaluations, double step = 1e-7) {
  Eigen::NumericalDiff<ResidualFunctor, Eigen::Central> diff(fn, step);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor, Eigen::Central>> lm(diff);
  lm.setMaxfev(max_evaluations);
  lm.setFtol(1e-15);
  lm.setXtol(1e-13);
  lm.minimize(x);
}

}  // namespace foldlab::detail
