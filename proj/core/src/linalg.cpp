#include "seqkernel/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "seqkernel/errors.hpp"

#ifdef SEQKERNEL_HAVE_OPENBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace seqkernel {

void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] {
#ifdef SEQKERNEL_HAVE_OPENBLAS
    openblas_set_num_threads(1);
#endif
  });
}

bool eigen_residual_ok(const Eigen::MatrixXd& A, const SymmetricEigen& eig) {
  const Eigen::Index n = A.rows();
  if (n == 0) return true;
  if (!eig.values.allFinite() || !eig.vectors.allFinite()) return false;
  constexpr double kTol = 1e-8;
  const double a_norm = std::max(A.norm(), 1e-300);
  Eigen::MatrixXd Z(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) Z(i, k) = std::sin(0.7548776662 * static_cast<double>((i + 1) * (k + 2)));
  }
  const Eigen::MatrixXd VZ = eig.vectors * Z;
  const double resid = (A * VZ - eig.vectors * (eig.values.asDiagonal() * Z)).norm();
  const double orth = (eig.vectors.transpose() * VZ - Z).norm();
  return resid <= kTol * a_norm * Z.norm() && orth <= kTol * Z.norm();
}

SymmetricEigen eigen_symmetric(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw_input("eigen_symmetric: matrix is not square");
  pin_blas_threads();
  SymmetricEigen out;
  const lapack_int n = static_cast<lapack_int>(A.rows());
  out.vectors = A;
  out.values.resize(n);
  if (n == 0) return out;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.vectors.data(), n,
                                         out.values.data());
  if (info == 0 && eigen_residual_ok(A, out)) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) {
    throw_numerical("symmetric eigendecomposition failed (info=" + std::to_string(info) + ")");
  }
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  out.fallback = true;
  return out;
}

Eigen::MatrixXd low_rank_factor(const Eigen::MatrixXd& A, double rel_tol) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd resid = A.diagonal();
  const double trace = resid.sum();
  Eigen::MatrixXd F(n, std::min<Eigen::Index>(n, 64));
  Eigen::Index r = 0;
  if (!(trace > 0.0)) return Eigen::MatrixXd::Zero(n, 0);
  while (r < n) {
    if (resid.sum() <= rel_tol * trace) break;
    Eigen::Index p = 0;
    const double piv = resid.maxCoeff(&p);
    if (!(piv > 0.0)) break;
    if (r == F.cols()) F.conservativeResize(n, std::min<Eigen::Index>(n, 2 * F.cols()));
    Eigen::VectorXd col = A.col(p);
    if (r > 0) col.noalias() -= F.leftCols(r) * F.row(p).head(r).transpose();
    col /= std::sqrt(piv);
    F.col(r) = col;
    resid -= col.cwiseAbs2();
    resid(p) = 0.0;
    resid = resid.cwiseMax(0.0);
    ++r;
  }
  return F.leftCols(r);
}

RegularizedFactor::RegularizedFactor(const Eigen::MatrixXd& K, double shift) : shift_(shift) {
  if (K.rows() != K.cols()) throw_input("regularized solve: Gram matrix is not square");
  const Eigen::Index n = K.rows();
  const double scale = n > 0 ? K.diagonal().mean() : 1.0;
  const double base = scale > 0.0 ? scale : 1.0;
  Eigen::MatrixXd S = K;
  S.diagonal().array() += shift;
  llt_.compute(S);
  if (llt_.info() == Eigen::Success) return;
  for (double j = 1e-10 * base; j <= 1e-6 * base * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd T = S;
    T.diagonal().array() += j;
    llt_.compute(T);
    if (llt_.info() == Eigen::Success) {
      jitter_ = j;
      return;
    }
  }
  throw_numerical("Cholesky factorization failed even with maximal jitter (n=" + std::to_string(n) + ")");
}

Eigen::VectorXd RegularizedFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != llt_.rows()) throw_input("regularized solve: right-hand side length mismatch");
  return llt_.solve(b);
}

Eigen::MatrixXd RegularizedFactor::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != llt_.rows()) throw_input("regularized solve: right-hand side row mismatch");
  return llt_.solve(B);
}

Eigen::MatrixXd RegularizedFactor::inverse() const {
  return llt_.solve(Eigen::MatrixXd::Identity(llt_.rows(), llt_.rows()));
}

}  // namespace seqkernel
