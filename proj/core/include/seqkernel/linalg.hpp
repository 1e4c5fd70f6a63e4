#pragma once

#include <Eigen/Dense>

namespace seqkernel {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns are eigenvectors
  bool fallback = false;    // LAPACK result failed its residual probe
};

// Full eigendecomposition of a symmetric matrix (LAPACK divide and conquer).
// The result is checked against a few fixed probe vectors; if the backend
// returns a wrong decomposition, Eigen's self-adjoint solver is used instead.
SymmetricEigen eigen_symmetric(const Eigen::MatrixXd& A);

// True when A V z = V diag(values) z and V^T V z = z hold for the probe vectors.
bool eigen_residual_ok(const Eigen::MatrixXd& A, const SymmetricEigen& eig);

// Pivoted Cholesky: returns F with A ~ F F^T, stopping once the residual
// trace falls below rel_tol * trace(A). A must be symmetric PSD.
Eigen::MatrixXd low_rank_factor(const Eigen::MatrixXd& A, double rel_tol = 1e-12);

// Cholesky factor of (K + shift*I), adding jitter if the plain factorization fails.
class RegularizedFactor {
 public:
  RegularizedFactor() = default;
  RegularizedFactor(const Eigen::MatrixXd& K, double shift);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
  Eigen::MatrixXd inverse() const;

  Eigen::Index size() const { return llt_.rows(); }
  double shift() const { return shift_; }
  double jitter() const { return jitter_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double shift_ = 0.0;
  double jitter_ = 0.0;
};

// Pins the BLAS backend to one thread so results do not depend on its scheduling.
void pin_blas_threads();

}  // namespace seqkernel
