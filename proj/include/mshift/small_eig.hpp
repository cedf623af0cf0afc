// SPDX-License-Identifier: Apache-2.0
#pragma once

// The one third-party numeric routine: Eigen's complex Schur-based
// eigensolver, kept behind this interface so it can be swapped out.

#include <Eigen/Dense>

#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>

namespace mshift {

struct PencilEigen {
  std::vector<cplx> values;
  ComplexMatrix right;  // E x = lambda F x, columns
  ComplexMatrix left;   // y^H E = lambda y^H F, rows (row i pairs with column i of right)
};

namespace detail {

inline Eigen::MatrixXcd to_eigen(ConstView<cplx> a) {
  Eigen::MatrixXcd e(a.rows, a.cols);
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) e(i, j) = a(i, j);
  return e;
}

inline ComplexMatrix from_eigen(const Eigen::MatrixXcd& e) {
  ComplexMatrix a(e.rows(), e.cols());
  for (index j = 0; j < a.cols(); ++j)
    for (index i = 0; i < a.rows(); ++i) a(i, j) = e(i, j);
  return a;
}

}  // namespace detail

/**
 * @brief Eigenvalues and left/right eigenvectors of the pencil (E, F), F
 * nonsingular. Right vectors have unit norm; left vectors are scaled so that
 * left * F * right = I.
 */
inline PencilEigen small_eig_pencil(ConstView<cplx> e, ConstView<cplx> f) {
  require_dims(e.rows == e.cols && f.rows == f.cols && e.rows == f.rows, "small_eig_pencil: square pencil expected");
  require_dims(e.rows <= 512, "small_eig_pencil: order above 512");
  const index r = e.rows;
  PencilEigen out;
  if (r == 0) return out;

  const Eigen::MatrixXcd fe = detail::to_eigen(f);
  Eigen::FullPivLU<Eigen::MatrixXcd> flu(fe);
  flu.setThreshold(static_cast<double>(r) * eps);
  if (!flu.isInvertible()) throw EigenError("small_eig_pencil: F is singular");
  const Eigen::MatrixXcd m = flu.solve(detail::to_eigen(e));
  if (!m.allFinite()) throw EigenError("small_eig_pencil: non-finite pencil");

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, true);
  if (es.info() != Eigen::Success) throw EigenError("small_eig_pencil: eigensolver did not converge");
  Eigen::MatrixXcd x = es.eigenvectors();
  for (index j = 0; j < r; ++j) x.col(j).normalize();
  Eigen::FullPivLU<Eigen::MatrixXcd> xlu(x);
  if (!xlu.isInvertible()) throw EigenError("small_eig_pencil: defective pencil");
  const Eigen::MatrixXcd y = xlu.inverse() * flu.inverse();

  out.values.resize(static_cast<std::size_t>(r));
  for (index i = 0; i < r; ++i) out.values[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  out.right = detail::from_eigen(x);
  out.left = detail::from_eigen(y);
  return out;
}

}  // namespace mshift
