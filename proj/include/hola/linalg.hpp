// Small dense symmetric-matrix helpers shared by the taming transforms and
// the samplers. Everything goes through symmetric eigendecompositions; the
// dimensions in play are desk scale.
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "hola/errors.hpp"

namespace hola {

// Spectral norm of a symmetric matrix. Closed forms for d <= 2 keep the
// per-step samplers off the eigensolver.
inline double spectral_norm_sym(const Eigen::MatrixXd& m) {
  const Eigen::Index d = m.rows();
  if (d == 1) return std::abs(m(0, 0));
  if (d == 2) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
    return std::max(std::abs(0.5 * tr + disc), std::abs(0.5 * tr - disc));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double min_eigenvalue_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Symmetric square root of an SPD matrix via eigendecomposition.
inline Eigen::MatrixXd matrix_sqrt_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ArgumentError("matrix_sqrt_spd: matrix must be square");
  if (!m.isApprox(m.transpose(), 1e-12)) throw ArgumentError("matrix_sqrt_spd: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ArgumentError("matrix_sqrt_spd: matrix is not positive definite (min eigenvalue " +
                        std::to_string(es.eigenvalues().minCoeff()) + ")");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace hola
