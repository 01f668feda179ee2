#pragma once

#include <Eigen/Dense>

#include "matconc/rng.hpp"
#include "matconc/symmat.hpp"

namespace matconc::testing {

inline SymMat random_sym(Eigen::Index d, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = scale * std_normal(rng);
  return SymMat(g);
}

/// G G^T / d + floor I
inline SymMat random_pd(Eigen::Index d, Rng& rng, double floor = 0.1) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = std_normal(rng);
  return SymMat(g * g.transpose() / static_cast<double>(d)) + SymMat::scaled_identity(d, floor);
}

inline Eigen::VectorXd random_unit(Eigen::Index d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = std_normal(rng);
  return v.normalized();
}

inline double op_dist(const SymMat& a, const SymMat& b) { return spectral_norm(a - b); }

}  // namespace matconc::testing
